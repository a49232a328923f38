#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genearl/ontology.hpp"

namespace genearl {

// Axis-aligned box, top-left origin, in pixels.
struct BBox {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;

  static BBox from_corners(double x1, double y1, double x2, double y2) {
    return {x1, y1, x2 - x1, y2 - y1};
  }
  bool valid() const { return width > 0 && height > 0 && x >= 0 && y >= 0; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ObjectRegion {
  std::string id;
  BBox bbox;
  std::optional<std::string> gold_role;
};

struct ImageRecord {
  std::string id;
  std::string image_ref;  // passed through to backends, never decoded here
  std::string event_name;
  std::vector<ObjectRegion> objects;
};

struct LoadReport {
  std::size_t images_read = 0;
  std::size_t images_kept = 0;
  std::size_t objects_kept = 0;
  std::size_t images_excluded_by_manifest = 0;
  std::size_t objects_dropped_unknown_role = 0;
  std::map<std::string, std::size_t> images_excluded_by_event;  // event -> count
  std::vector<std::string> warnings;

  std::size_t images_excluded_by_ontology() const;
  std::set<std::string> events_present;
};

struct Dataset {
  std::vector<ImageRecord> images;
  LoadReport report;

  const ImageRecord* find(std::string_view image_id) const;
  std::size_t object_count() const;
};

// Parses a dataset document and keeps the images whose event exists in
// `ontology`. Objects whose gold role is not a role of their (filtered) event
// are dropped and counted. When `manifest` is given, only the listed image ids
// are admitted.
Dataset dataset_from_json(const nlohmann::json& doc, const Ontology& ontology,
                          const std::string& source,
                          const std::optional<std::vector<std::string>>& manifest = {});
// As dataset_from_json; relative image paths are resolved against the
// directory of `path`.
Dataset load_dataset(const std::filesystem::path& path, const Ontology& ontology,
                     const std::optional<std::vector<std::string>>& manifest = {});
nlohmann::json to_json(const Dataset& dataset);

// Reads an id-list manifest: one image id per line, '#' comments allowed.
std::vector<std::string> load_manifest(const std::filesystem::path& path);

// One labeling query. Points into the Dataset and Ontology it was built from;
// both must outlive it.
struct Instance {
  const ImageRecord* image = nullptr;
  const EventType* event = nullptr;
  const ObjectRegion* object = nullptr;
  std::vector<std::string> candidate_roles;
};

// One instance per (image, object) in document order. Images whose event is
// missing from `ontology` or has no roles are skipped with a warning.
// `event_override` maps image id -> event name to label under instead of the
// gold event (used when events come from a detector).
std::vector<Instance> build_instances(
    const Dataset& dataset, const Ontology& ontology,
    std::vector<std::string>* warnings = nullptr,
    const std::map<std::string, std::string>* event_override = nullptr);

using InstanceBatch = std::vector<Instance>;

// Partitions by image id. Batch order follows first appearance; object order
// within a batch is preserved.
std::vector<InstanceBatch> group_by_image(const std::vector<Instance>& instances);

struct ExemplarImage {
  const ImageRecord* image = nullptr;
  std::optional<std::string> caption;
  std::vector<std::string> descriptions;  // parallel to image->objects once filled
};

// Draws k distinct images without replacement from a generator seeded with
// `seed`. Same (dataset, k, seed) always yields the same images in the same
// order. Throws ValidationError when k exceeds the image count or a drawn
// image has an object without a gold role.
std::vector<ExemplarImage> sample_few_shot(const Dataset& dataset, std::size_t k,
                                           std::uint64_t seed);

std::set<std::string> exemplar_ids(const std::vector<ExemplarImage>& exemplars);

}  // namespace genearl
