#include "genearl/importers.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "genearl/error.hpp"

namespace genearl {

using nlohmann::json;

namespace {

std::optional<json> corner_box(const json& v, const std::string& ctx) {
  if (!v.is_array() || (v.size() != 4 && v.size() != 5)) {
    throw ParseError(ctx, "expected [x1, y1, x2, y2] or [n, x1, y1, x2, y2]");
  }
  const std::size_t off = v.size() - 4;
  double c[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[off + i].is_number()) throw ParseError(ctx, "box coordinates must be numbers");
    c[i] = v[off + i].get<double>();
  }
  const double x1 = std::max(0.0, c[0]);
  const double y1 = std::max(0.0, c[1]);
  if (c[2] - x1 <= 0 || c[3] - y1 <= 0) return std::nullopt;
  return json::array({x1, y1, c[2] - x1, c[3] - y1});
}

std::string stem_of(const std::string& file) { return std::filesystem::path(file).stem().string(); }

}  // namespace

std::string canonical_m2e2_event(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == ':') {
      out += '.';
    } else if (c != '-' && c != '_' && !std::isspace(static_cast<unsigned char>(c))) {
      out += c;
    }
  }
  return out;
}

json import_m2e2(const json& annotations, const std::filesystem::path& image_dir,
                 ImportStats* stats) {
  if (!annotations.is_object()) throw ParseError("m2e2", "expected an object keyed by image id");
  ImportStats local;
  json images = json::array();
  for (const auto& [id, entry] : annotations.items()) {
    const std::string ctx = "m2e2[" + id + "]";
    if (!entry.contains("event_type") || !entry["event_type"].is_string()) {
      throw ParseError(ctx, "missing event_type");
    }
    json objects = json::array();
    if (entry.contains("role")) {
      std::size_t n = 0;
      for (const auto& [role, boxes] : entry["role"].items()) {
        if (!boxes.is_array()) throw ParseError(ctx + ".role." + role, "expected a list of boxes");
        for (const auto& b : boxes) {
          auto box = corner_box(b, ctx + ".role." + role);
          if (!box) {
            ++local.skipped_boxes;
            continue;
          }
          objects.push_back({{"id", "o" + std::to_string(++n)}, {"bbox", *box}, {"role", role}});
        }
      }
    }
    local.objects += objects.size();
    ++local.images;
    images.push_back({{"id", id},
                      {"path", (image_dir / (id + ".jpg")).string()},
                      {"event", canonical_m2e2_event(entry["event_type"].get<std::string>())},
                      {"objects", std::move(objects)}});
  }
  if (stats) *stats = local;
  return {{"images", std::move(images)}};
}

json import_swig(const json& annotations, const std::filesystem::path& image_dir,
                 ImportStats* stats) {
  if (!annotations.is_object()) throw ParseError("swig", "expected an object keyed by file name");
  ImportStats local;
  json images = json::array();
  for (const auto& [file, entry] : annotations.items()) {
    const std::string ctx = "swig[" + file + "]";
    if (!entry.contains("verb") || !entry["verb"].is_string()) throw ParseError(ctx, "missing verb");
    json objects = json::array();
    if (entry.contains("bb")) {
      for (const auto& [role, b] : entry["bb"].items()) {
        auto box = corner_box(b, ctx + ".bb." + role);
        if (!box) {
          ++local.skipped_boxes;
          continue;
        }
        objects.push_back({{"id", role}, {"bbox", *box}, {"role", role}});
      }
    }
    local.objects += objects.size();
    ++local.images;
    images.push_back({{"id", stem_of(file)},
                      {"path", (image_dir / file).string()},
                      {"event", entry["verb"]},
                      {"objects", std::move(objects)}});
  }
  if (stats) *stats = local;
  return {{"images", std::move(images)}};
}

json import_swig_ontology(const json& space, const std::string& name) {
  if (!space.contains("verbs") || !space["verbs"].is_object()) {
    throw ParseError("swig space", "missing verbs");
  }
  json events = json::array();
  for (const auto& [verb, def] : space["verbs"].items()) {
    const std::string ctx = "swig space.verbs." + verb;
    json roles = json::array();
    const json order = def.value("order", json::array());
    for (const auto& r : order) {
      if (!r.is_string()) throw ParseError(ctx + ".order", "role names must be strings");
      const std::string role = r.get<std::string>();
      std::string text;
      if (def.contains("roles") && def["roles"].contains(role)) {
        text = def["roles"][role].value("def", "");
      }
      roles.push_back({{"name", role}, {"definition", text}});
    }
    events.push_back(
        {{"name", verb}, {"definition", def.value("abstract", "")}, {"roles", std::move(roles)}});
  }
  return {{"name", name}, {"events", std::move(events)}};
}

}  // namespace genearl
