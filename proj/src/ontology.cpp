#include "genearl/ontology.hpp"

#include <algorithm>
#include <set>

#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/text.hpp"

namespace genearl {

std::vector<std::string> EventType::role_names() const {
  std::vector<std::string> names;
  names.reserve(roles.size());
  for (const auto& r : roles) names.push_back(r.name);
  return names;
}

const EventType* Ontology::find(std::string_view event_name) const {
  for (const auto& e : events) {
    if (e.name == event_name) return &e;
  }
  return nullptr;
}

std::vector<std::string> Ontology::event_names() const {
  std::vector<std::string> names;
  names.reserve(events.size());
  for (const auto& e : events) names.push_back(e.name);
  return names;
}

void validate(const Ontology& ontology) {
  std::set<std::string> event_names;
  for (const auto& event : ontology.events) {
    if (text::trim(event.name).empty()) {
      throw ValidationError("ontology '" + ontology.name + "': event with empty name");
    }
    if (!event_names.insert(event.name).second) {
      throw ValidationError("duplicate event name '" + event.name + "'");
    }
    if (event.roles.empty()) {
      throw ValidationError("event '" + event.name + "' has no roles");
    }
    std::set<std::string> role_names;
    for (const auto& role : event.roles) {
      const std::string key = text::to_lower(text::trim(role.name));
      if (key.empty()) {
        throw ValidationError("event '" + event.name + "': role with empty name");
      }
      if (text::iequals(key, kOtherLabel)) {
        throw ValidationError("event '" + event.name + "': role name 'Other' is reserved");
      }
      if (!role_names.insert(key).second) {
        throw ValidationError("event '" + event.name + "': duplicate role name '" +
                              role.name + "'");
      }
    }
  }
}

Ontology ontology_from_json(const nlohmann::json& doc, const std::string& source) {
  using namespace json_io;
  Ontology out;
  out.name = optional_string(doc, "name", source);
  const auto& events = require_array(doc, "events", source);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string ctx = source + ".events[" + std::to_string(i) + "]";
    EventType event;
    event.name = require_string(events[i], "name", ctx);
    event.definition = optional_string(events[i], "definition", ctx);
    const auto& roles = require_array(events[i], "roles", ctx);
    for (std::size_t j = 0; j < roles.size(); ++j) {
      const std::string rctx = ctx + ".roles[" + std::to_string(j) + "]";
      ArgumentRole role;
      role.name = require_string(roles[j], "name", rctx);
      role.definition = optional_string(roles[j], "definition", rctx);
      event.roles.push_back(std::move(role));
    }
    out.events.push_back(std::move(event));
  }
  if (out.events.empty()) {
    throw ValidationError(source + ": ontology has no events");
  }
  validate(out);
  return out;
}

nlohmann::json to_json(const Ontology& ontology) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : ontology.events) {
    nlohmann::json roles = nlohmann::json::array();
    for (const auto& r : e.roles) {
      roles.push_back({{"name", r.name}, {"definition", r.definition}});
    }
    events.push_back({{"name", e.name}, {"definition", e.definition}, {"roles", roles}});
  }
  return {{"name", ontology.name}, {"events", events}};
}

Ontology parse_ontology(std::string_view text, const std::string& source) {
  return ontology_from_json(json_io::parse(text, source), source);
}

Ontology load_ontology(const std::filesystem::path& path) {
  return parse_ontology(json_io::read_file(path), path.string());
}

Ontology filter_min_roles(const Ontology& ontology, std::size_t min_roles) {
  if (min_roles < 1) throw ValidationError("min_roles must be at least 1");
  Ontology out{ontology.name, {}};
  std::copy_if(ontology.events.begin(), ontology.events.end(),
               std::back_inserter(out.events),
               [&](const EventType& e) { return e.roles.size() >= min_roles; });
  return out;
}

Ontology exclude_role(const Ontology& ontology, std::string_view role_name) {
  const std::string needle = text::trim(role_name);
  Ontology out{ontology.name, {}};
  for (const auto& event : ontology.events) {
    EventType kept{event.name, event.definition, {}};
    for (const auto& role : event.roles) {
      if (!text::iequals(text::trim(role.name), needle)) kept.roles.push_back(role);
    }
    if (!kept.roles.empty()) out.events.push_back(std::move(kept));
  }
  return out;
}

std::string role_definition_block(const EventType& event) {
  std::vector<std::string> lines;
  const std::string event_def = text::collapse_whitespace(event.definition);
  if (!event_def.empty()) lines.push_back(event_def);
  for (const auto& role : event.roles) {
    const std::string def = text::collapse_whitespace(role.definition);
    lines.push_back(def.empty() ? "- " + role.name : "- " + role.name + ": " + def);
  }
  return text::join(lines, "\n");
}

}  // namespace genearl
