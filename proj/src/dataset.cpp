#include "genearl/dataset.hpp"

#include <random>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/text.hpp"

namespace genearl {

std::size_t LoadReport::images_excluded_by_ontology() const {
  std::size_t n = 0;
  for (const auto& [_, count] : images_excluded_by_event) n += count;
  return n;
}

const ImageRecord* Dataset::find(std::string_view image_id) const {
  for (const auto& img : images) {
    if (img.id == image_id) return &img;
  }
  return nullptr;
}

std::size_t Dataset::object_count() const {
  std::size_t n = 0;
  for (const auto& img : images) n += img.objects.size();
  return n;
}

namespace {

BBox parse_bbox(const nlohmann::json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 4) throw ParseError(ctx, "bbox must be [x, y, w, h]");
  for (const auto& n : v) {
    if (!n.is_number()) throw ParseError(ctx, "bbox entries must be numbers");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

const ArgumentRole* find_role(const EventType& event, std::string_view name) {
  for (const auto& r : event.roles) {
    if (text::iequals(text::trim(r.name), text::trim(name))) return &r;
  }
  return nullptr;
}

}  // namespace

Dataset dataset_from_json(const nlohmann::json& doc, const Ontology& ontology,
                          const std::string& source,
                          const std::optional<std::vector<std::string>>& manifest) {
  using namespace json_io;
  std::unordered_set<std::string> wanted;
  if (manifest) wanted.insert(manifest->begin(), manifest->end());

  Dataset out;
  LoadReport& report = out.report;
  std::unordered_set<std::string> seen_images;
  const auto& images = require_array(doc, "images", source);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ctx = source + ".images[" + std::to_string(i) + "]";
    ImageRecord img;
    img.id = identifier(require(images[i], "id", ctx), ctx + ".id");
    img.image_ref = require_string(images[i], "path", ctx);
    img.event_name = require_string(images[i], "event", ctx);
    ++report.images_read;
    if (!seen_images.insert(img.id).second) {
      throw ValidationError("duplicate image id '" + img.id + "'");
    }

    const auto& objects = require_array(images[i], "objects", ctx);
    std::unordered_set<std::string> seen_objects;
    for (std::size_t j = 0; j < objects.size(); ++j) {
      const std::string octx = ctx + ".objects[" + std::to_string(j) + "]";
      ObjectRegion obj;
      obj.id = identifier(require(objects[j], "id", octx), octx + ".id");
      obj.bbox = parse_bbox(require(objects[j], "bbox", octx), octx + ".bbox");
      if (!obj.bbox.valid()) {
        throw ValidationError("image '" + img.id + "' object '" + obj.id +
                              "': bbox needs width > 0, height > 0, x >= 0, y >= 0");
      }
      if (!seen_objects.insert(obj.id).second) {
        throw ValidationError("image '" + img.id + "': duplicate object id '" + obj.id + "'");
      }
      std::string role = optional_string(objects[j], "role", octx);
      if (!role.empty()) obj.gold_role = std::move(role);
      img.objects.push_back(std::move(obj));
    }

    if (manifest && !wanted.count(img.id)) {
      ++report.images_excluded_by_manifest;
      continue;
    }
    const EventType* event = ontology.find(img.event_name);
    if (event == nullptr) {
      ++report.images_excluded_by_event[img.event_name];
      continue;
    }
    std::vector<ObjectRegion> kept;
    for (auto& obj : img.objects) {
      if (obj.gold_role) {
        const ArgumentRole* role = find_role(*event, *obj.gold_role);
        if (role == nullptr) {
          ++report.objects_dropped_unknown_role;
          continue;
        }
        obj.gold_role = role->name;  // canonical spelling from the ontology
      }
      kept.push_back(std::move(obj));
    }
    img.objects = std::move(kept);
    report.objects_kept += img.objects.size();
    report.events_present.insert(img.event_name);
    out.images.push_back(std::move(img));
  }
  report.images_kept = out.images.size();

  if (manifest) {
    for (const auto& id : *manifest) {
      if (!seen_images.count(id)) {
        report.warnings.push_back("manifest id '" + id + "' not found in " + source);
      }
    }
  }
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, const Ontology& ontology,
                     const std::optional<std::vector<std::string>>& manifest) {
  Dataset d = dataset_from_json(json_io::read(path), ontology, path.string(), manifest);
  // Relative image paths are relative to the dataset document.
  const auto base = path.parent_path();
  for (auto& img : d.images) {
    const std::filesystem::path ref(img.image_ref);
    if (ref.is_relative()) {
      img.image_ref = std::filesystem::absolute(base / ref).lexically_normal().string();
    }
  }
  return d;
}

nlohmann::json to_json(const Dataset& dataset) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& img : dataset.images) {
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : img.objects) {
      nlohmann::json obj = {{"id", o.id},
                            {"bbox", {o.bbox.x, o.bbox.y, o.bbox.width, o.bbox.height}}};
      if (o.gold_role) obj["role"] = *o.gold_role;
      objects.push_back(std::move(obj));
    }
    images.push_back(
        {{"id", img.id}, {"path", img.image_ref}, {"event", img.event_name}, {"objects", objects}});
  }
  return {{"images", images}};
}

std::vector<std::string> load_manifest(const std::filesystem::path& path) {
  std::vector<std::string> ids;
  for (const auto& line : text::split_lines(json_io::read_file(path))) {
    std::string id = text::trim(line);
    if (id.empty() || id.front() == '#') continue;
    ids.push_back(std::move(id));
  }
  return ids;
}

std::vector<Instance> build_instances(const Dataset& dataset, const Ontology& ontology,
                                      std::vector<std::string>* warnings,
                                      const std::map<std::string, std::string>* event_override) {
  std::vector<Instance> out;
  auto warn = [&](std::string msg) {
    spdlog::warn("{}", msg);
    if (warnings) warnings->push_back(std::move(msg));
  };
  for (const auto& img : dataset.images) {
    std::string event_name = img.event_name;
    if (event_override) {
      auto it = event_override->find(img.id);
      if (it != event_override->end()) event_name = it->second;
    }
    const EventType* event = ontology.find(event_name);
    if (event == nullptr) {
      warn("image '" + img.id + "': event '" + event_name + "' not in ontology, skipped");
      continue;
    }
    if (event->roles.empty()) {
      warn("image '" + img.id + "': event '" + event_name + "' has no roles, skipped");
      continue;
    }
    const auto candidates = event->role_names();
    for (const auto& obj : img.objects) {
      out.push_back(Instance{&img, event, &obj, candidates});
    }
  }
  return out;
}

std::vector<InstanceBatch> group_by_image(const std::vector<Instance>& instances) {
  std::vector<InstanceBatch> batches;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& inst : instances) {
    auto [it, inserted] = index.emplace(inst.image->id, batches.size());
    if (inserted) batches.emplace_back();
    batches[it->second].push_back(inst);
  }
  return batches;
}

namespace {

// Uniform integer in [0, bound) from raw 64-bit draws. Written out instead of
// std::uniform_int_distribution so draws are identical across standard
// libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  // Reject the 2^64 mod bound lowest values so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x < threshold);
  return x % bound;
}

}  // namespace

std::vector<ExemplarImage> sample_few_shot(const Dataset& dataset, std::size_t k,
                                           std::uint64_t seed) {
  const std::size_t n = dataset.images.size();
  if (k > n) {
    throw ValidationError("cannot sample " + std::to_string(k) + " exemplar images from " +
                          std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::vector<ExemplarImage> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
    std::swap(order[i], order[j]);
    const ImageRecord& img = dataset.images[order[i]];
    for (const auto& obj : img.objects) {
      if (!obj.gold_role) {
        throw ValidationError("exemplar image '" + img.id + "' object '" + obj.id +
                              "' has no gold role");
      }
    }
    out.push_back(ExemplarImage{&img, std::nullopt, {}});
  }
  return out;
}

std::set<std::string> exemplar_ids(const std::vector<ExemplarImage>& exemplars) {
  std::set<std::string> ids;
  for (const auto& e : exemplars) ids.insert(e.image->id);
  return ids;
}

}  // namespace genearl
