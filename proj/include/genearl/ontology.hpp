#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace genearl {

// Abstention label every predictor may emit. Never stored in an ontology.
inline constexpr std::string_view kOtherLabel = "Other";

struct ArgumentRole {
  std::string name;
  std::string definition;  // may be empty

  friend bool operator==(const ArgumentRole&, const ArgumentRole&) = default;
};

struct EventType {
  std::string name;
  std::string definition;  // may be empty
  std::vector<ArgumentRole> roles;

  std::vector<std::string> role_names() const;
  friend bool operator==(const EventType&, const EventType&) = default;
};

struct Ontology {
  std::string name;
  std::vector<EventType> events;

  const EventType* find(std::string_view event_name) const;
  std::vector<std::string> event_names() const;
  friend bool operator==(const Ontology&, const Ontology&) = default;
};

// Per-event invariants: non-empty names, non-empty role list, role names
// distinct (case-insensitive) and never "Other"; event names distinct.
// Throws ValidationError naming the offender. An empty event list is legal
// here (filters may produce one); loading rejects it.
void validate(const Ontology& ontology);

Ontology ontology_from_json(const nlohmann::json& doc, const std::string& source);
nlohmann::json to_json(const Ontology& ontology);
Ontology parse_ontology(std::string_view text, const std::string& source = "<ontology>");
Ontology load_ontology(const std::filesystem::path& path);

// Keeps events with at least `min_roles` roles, in order. min_roles must be >= 1.
Ontology filter_min_roles(const Ontology& ontology, std::size_t min_roles);

// Drops every role whose trimmed name matches `role_name` case-insensitively,
// then drops events left without roles.
Ontology exclude_role(const Ontology& ontology, std::string_view role_name);

// Text used for the role-definition slot of every prompt: the event's
// definition sentence (when present) on the first line, then one "- Name" or
// "- Name: definition" line per role in ontology order.
std::string role_definition_block(const EventType& event);

}  // namespace genearl
