#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace genearl {

// Converters from public annotation releases into the dataset and ontology
// document formats. Corner boxes become (x, y, w, h); negative corners are
// clamped to 0 and boxes left without area are skipped.

struct ImportStats {
  std::size_t images = 0;
  std::size_t objects = 0;
  std::size_t skipped_boxes = 0;
};

// "Justice:Arrest-Jail" -> "Justice.ArrestJail".
std::string canonical_m2e2_event(std::string_view name);

// Image-event annotations keyed by image id:
//   {"<id>": {"event_type": "Life:Die", "role": {"Victim": [[n, x1, y1, x2, y2], ...]}}}
// Boxes may also be bare [x1, y1, x2, y2]. Images live at <image_dir>/<id>.jpg.
nlohmann::json import_m2e2(const nlohmann::json& annotations, const std::filesystem::path& image_dir,
                           ImportStats* stats = nullptr);

// Situation annotations keyed by file name:
//   {"<file>.jpg": {"verb": "dialing", "bb": {"agent": [x1, y1, x2, y2], "tool": [-1, -1, -1, -1]}}}
// Roles with an all-negative box are ungrounded and skipped.
nlohmann::json import_swig(const nlohmann::json& annotations, const std::filesystem::path& image_dir,
                           ImportStats* stats = nullptr);

// Verb space {"verbs": {"<verb>": {"abstract": ..., "order": [...], "roles": {"<r>": {"def": ...}}}}}
// as an ontology document; events and roles keep the space's order.
nlohmann::json import_swig_ontology(const nlohmann::json& space, const std::string& name = "swig");

}  // namespace genearl
