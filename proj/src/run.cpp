#include "genearl/run.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include <spdlog/spdlog.h>

#include "genearl/baseline.hpp"
#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/parallel.hpp"
#include "genearl/text.hpp"

namespace genearl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kConfigKeys = {
    "dataset",   "ontology",        "manifest",     "method",
    "shots",     "mode",            "seed",         "min_roles",
    "excluded_roles", "cache_dir",  "output_dir",   "include_exemplars_in_eval",
    "templates_dir", "parallelism", "event_predictions", "detector",
    "backends"};

const std::map<std::string, BackendKind> kRoleKinds = {{"gvlm", BackendKind::GvlmGenerate},
                                                       {"llm", BackendKind::LlmChat},
                                                       {"scorer", BackendKind::LlmScore},
                                                       {"embed", BackendKind::Embed}};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal();
  return (base / path).lexically_normal();
}

std::optional<fs::path> optional_path(const json& doc, const char* key, const fs::path& base) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  if (!doc.at(key).is_string()) throw ConfigError(std::string("config.") + key + " must be a path");
  return resolve(base, doc.at(key).get<std::string>());
}

std::uint64_t non_negative(const json& doc, const char* key, std::uint64_t fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ConfigError(std::string("config.") + key + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string opt_string(const std::optional<fs::path>& p) { return p ? p->string() : ""; }

}  // namespace

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kConfigKeys.count(key)) throw ConfigError("unknown run config key '" + key + "'");
  }
  RunConfig c;
  try {
    if (!doc.contains("dataset") || !doc.at("dataset").is_string()) {
      throw ConfigError("run config needs a dataset path");
    }
    if (!doc.contains("ontology") || !doc.at("ontology").is_string()) {
      throw ConfigError("run config needs an ontology path");
    }
    c.dataset = resolve(base_dir, doc.at("dataset").get<std::string>());
    c.ontology = resolve(base_dir, doc.at("ontology").get<std::string>());
    c.manifest = optional_path(doc, "manifest", base_dir);
    if (doc.contains("method")) c.method = parse_method(doc.at("method").get<std::string>());
    c.shots = non_negative(doc, "shots", 0);
    if (doc.contains("mode")) c.mode = parse_prompt_mode(doc.at("mode").get<std::string>());
    c.seed = non_negative(doc, "seed", 0);
    c.min_roles = non_negative(doc, "min_roles", 3);
    if (c.min_roles == 0) throw ConfigError("config.min_roles must be at least 1");
    if (doc.contains("excluded_roles")) {
      c.excluded_roles = doc.at("excluded_roles").get<std::vector<std::string>>();
    }
    c.cache_dir = optional_path(doc, "cache_dir", base_dir);
    if (auto out = optional_path(doc, "output_dir", base_dir)) c.output_dir = *out;
    c.include_exemplars_in_eval = doc.value("include_exemplars_in_eval", false);
    c.templates_dir = optional_path(doc, "templates_dir", base_dir);
    c.parallelism = non_negative(doc, "parallelism", 4);
    if (c.parallelism == 0) throw ConfigError("config.parallelism must be at least 1");
    c.event_predictions = optional_path(doc, "event_predictions", base_dir);
    if (doc.contains("detector")) {
      const std::string d = text::to_lower(doc.at("detector").get<std::string>());
      if (d == "generative") {
        c.detector = Detector::Generative;
      } else if (d == "clip") {
        c.detector = Detector::Clip;
      } else {
        throw ConfigError("config.detector must be generative or clip");
      }
    }
    if (doc.contains("backends")) {
      for (const auto& [role, section] : doc.at("backends").items()) {
        auto kind = kRoleKinds.find(role);
        if (kind == kRoleKinds.end()) {
          throw ConfigError("unknown backend role '" + role + "' (expected gvlm, llm, scorer or embed)");
        }
        json s = section;
        if (!s.is_object()) throw ConfigError("config.backends." + role + " must be an object");
        if (!s.contains("kind")) s["kind"] = std::string(to_string(kind->second));
        BackendConfig bc = backend_config_from_json(s, "config.backends." + role);
        if (bc.kind != kind->second) {
          throw ConfigError("config.backends." + role + " must have kind '" +
                            std::string(to_string(kind->second)) + "'");
        }
        for (const char* key : {"path", "script"}) {
          if (bc.options.contains(key) && bc.options.at(key).is_string()) {
            bc.options[key] = resolve(base_dir, bc.options.at(key).get<std::string>()).string();
          }
        }
        c.backends.emplace(role, std::move(bc));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  json doc;
  try {
    doc = json_io::read(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
  json backends = json::object();
  for (const auto& [role, bc] : c.backends) backends[role] = to_json(bc);
  return {{"dataset", c.dataset.string()},
          {"ontology", c.ontology.string()},
          {"manifest", c.manifest ? json(c.manifest->string()) : json(nullptr)},
          {"method", to_string(c.method)},
          {"shots", c.shots},
          {"mode", to_string(c.mode)},
          {"seed", c.seed},
          {"min_roles", c.min_roles},
          {"excluded_roles", c.excluded_roles},
          {"cache_dir", c.cache_dir ? json(c.cache_dir->string()) : json(nullptr)},
          {"output_dir", c.output_dir.string()},
          {"include_exemplars_in_eval", c.include_exemplars_in_eval},
          {"templates_dir", c.templates_dir ? json(c.templates_dir->string()) : json(nullptr)},
          {"parallelism", c.parallelism},
          {"event_predictions",
           c.event_predictions ? json(c.event_predictions->string()) : json(nullptr)},
          {"detector", c.detector == Detector::Clip ? "clip" : "generative"},
          {"backends", backends}};
}

namespace {

void require_backend(const RunConfig& c, const std::string& role, const std::string& why) {
  if (!c.backends.count(role)) {
    throw ConfigError(why + " needs a '" + role + "' backend in config.backends");
  }
}

}  // namespace

void validate_for_run(const RunConfig& c) {
  const std::string m = "method " + std::string(to_string(c.method));
  switch (c.method) {
    case Method::Genearl:
      require_backend(c, "gvlm", m);
      require_backend(c, "llm", m);
      break;
    case Method::DirectGvlm: require_backend(c, "gvlm", m); break;
    case Method::Alpaca:
      require_backend(c, "gvlm", m);
      require_backend(c, "scorer", m);
      break;
    case Method::Baseline: require_backend(c, "embed", m); break;
  }
  if (c.shots > 0 && c.method != Method::Genearl) {
    throw ConfigError("shots > 0 is only supported by method genearl");
  }
}

void validate_for_detect(const RunConfig& c) {
  if (c.detector == Detector::Clip) {
    require_backend(c, "embed", "clip event detection");
  } else {
    require_backend(c, "gvlm", "generative event detection");
    require_backend(c, "llm", "generative event detection");
  }
}

PreparedInputs prepare_inputs(const fs::path& dataset, const fs::path& ontology,
                              std::size_t min_roles,
                              const std::vector<std::string>& excluded_roles,
                              const std::optional<fs::path>& manifest) {
  PreparedInputs p;
  p.ontology = load_ontology(ontology);
  for (const auto& role : excluded_roles) p.ontology = exclude_role(p.ontology, role);
  p.ontology = filter_min_roles(p.ontology, min_roles);
  std::optional<std::vector<std::string>> ids;
  if (manifest) ids = load_manifest(*manifest);
  p.dataset = load_dataset(dataset, p.ontology, ids);
  return p;
}

// --- RunSession --------------------------------------------------------------

RunSession::RunSession(RunConfig config, std::shared_ptr<ResponseArchive> archive)
    : config_(std::move(config)),
      inputs_(prepare_inputs(config_.dataset, config_.ontology, config_.min_roles,
                             config_.excluded_roles, config_.manifest)),
      templates_(config_.templates_dir ? TemplateSet::with_overrides(*config_.templates_dir)
                                       : TemplateSet::builtin()),
      archive_(std::move(archive)) {
  for (const auto& [role, bc] : config_.backends) {
    stacks_.emplace(role, make_backend_stack(make_raw_backend(bc, &inputs_.dataset, templates_),
                                             config_.cache_dir, archive_));
  }
  if (config_.event_predictions) {
    for (const auto& e : load_prediction_set(*config_.event_predictions).event_predictions) {
      event_override_[e.image_id] = e.event;
    }
  }
}

Backend& RunSession::backend(const std::string& role) {
  auto it = stacks_.find(role);
  if (it == stacks_.end()) throw ConfigError("no '" + role + "' backend configured");
  return *it->second.handle;
}

std::size_t RunSession::dispatches() const {
  std::size_t n = 0;
  for (const auto& [_, s] : stacks_) n += s.counter->dispatches();
  return n;
}

json RunSession::dispatch_summary() const {
  json out = json::object();
  for (const auto& [role, s] : stacks_) {
    json entry = {{"provider", s.handle->config().provider},
                  {"model", s.handle->config().model},
                  {"dispatches", s.counter->dispatches()}};
    if (s.cache) {
      const CacheStats st = s.cache->stats();
      entry["cache_hits"] = st.hits;
      entry["cache_misses"] = st.misses;
      entry["cache_invalidated"] = st.invalidated;
    }
    out[role] = entry;
  }
  return out;
}

json RunSession::base_metadata() const {
  json backends = json::object();
  for (const auto& [role, bc] : config_.backends) backends[role] = to_json(bc);
  return {{"method", to_string(config_.method)},
          {"shots", config_.shots},
          {"mode", to_string(config_.mode)},
          {"seed", config_.seed},
          {"min_roles", config_.min_roles},
          {"excluded_roles", config_.excluded_roles},
          {"include_exemplars_in_eval", config_.include_exemplars_in_eval},
          {"dataset", config_.dataset.string()},
          {"ontology", {{"name", inputs_.ontology.name},
                        {"path", config_.ontology.string()},
                        {"events", inputs_.ontology.event_names()}}},
          {"manifest", opt_string(config_.manifest)},
          {"event_predictions", opt_string(config_.event_predictions)},
          {"templates_dir", opt_string(config_.templates_dir)},
          {"backends", backends}};
}

namespace {

std::string key_of(const std::string& image, const std::string& object, const std::string& event) {
  return image + '\x1f' + object + '\x1f' + event;
}

std::string message_of(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const std::exception& e) {
    return e.what();
  }
}

}  // namespace

PredictionSet RunSession::run() {
  validate_for_run(config_);
  const std::string started = utc_now();
  PredictionSet out;
  switch (config_.method) {
    case Method::Genearl:
    case Method::Alpaca: out = run_generative(); break;
    case Method::DirectGvlm: out = run_per_object(); break;
    case Method::Baseline: out = run_embedding_baseline(); break;
  }
  if (config_.event_predictions) {
    out.event_predictions = load_prediction_set(*config_.event_predictions).event_predictions;
  }
  out.metadata["timestamps"] = {{"started_at", started}, {"finished_at", utc_now()}};
  validate(out);
  return out;
}

PredictionSet RunSession::run_generative() {
  const Dataset& ds = inputs_.dataset;
  const Ontology& ont = inputs_.ontology;
  const bool genearl = config_.method == Method::Genearl;
  const StageOptions stage{config_.parallelism, &templates_};

  const auto instances =
      build_instances(ds, ont, &warnings_, config_.event_predictions ? &event_override_ : nullptr);
  const auto exemplars = genearl ? sample_few_shot(ds, config_.shots, config_.seed)
                                 : std::vector<ExemplarImage>{};
  const std::set<std::string> ex_ids = exemplar_ids(exemplars);
  std::vector<Instance> eval;
  for (const auto& inst : instances) {
    if (config_.include_exemplars_in_eval || !ex_ids.count(inst.image->id)) eval.push_back(inst);
  }

  // Exemplar objects are described under their gold event.
  std::vector<Instance> exemplar_instances;
  for (const auto& inst : build_instances(ds, ont)) {
    if (ex_ids.count(inst.image->id)) exemplar_instances.push_back(inst);
  }

  std::vector<const ImageRecord*> caption_targets;
  std::set<std::string> wanted;
  for (const auto& inst : eval) wanted.insert(inst.image->id);
  for (const auto& id : ex_ids) wanted.insert(id);
  for (const auto& img : ds.images) {
    if (wanted.count(img.id)) caption_targets.push_back(&img);
  }

  PredictionSet out;
  const auto captions = caption_images(caption_targets, backend("gvlm"), stage, &out.failures);
  std::map<std::string, const CaptionRecord*> caption_of;
  for (const auto& c : captions) caption_of[c.image_id] = &c;

  std::vector<Instance> describe_targets;
  std::set<std::string> described;
  for (const auto* list : {&exemplar_instances, &eval}) {
    for (const auto& inst : *list) {
      if (described.insert(key_of(inst.image->id, inst.object->id, inst.event->name)).second) {
        describe_targets.push_back(inst);
      }
    }
  }
  const auto descriptions =
      describe_objects(describe_targets, backend("gvlm"), config_.mode, stage, &out.failures);
  std::map<std::string, const DescriptionRecord*> description_of;
  for (const auto& d : descriptions) {
    description_of[key_of(d.image_id, d.object_id, d.event_name)] = &d;
  }

  std::vector<SolvedInstance> solved;
  for (auto ex : exemplars) {
    const CaptionRecord* cap = caption_of.at(ex.image->id);
    if (!cap->ok()) {
      throw BackendError("exemplar image '" + ex.image->id + "' has no caption: " + cap->error);
    }
    ex.caption = cap->text;
    for (const auto& obj : ex.image->objects) {
      auto it = description_of.find(key_of(ex.image->id, obj.id, ex.image->event_name));
      if (it == description_of.end() || !it->second->ok()) {
        throw BackendError("exemplar object '" + obj.id + "' of image '" + ex.image->id +
                           "' has no description" +
                           (it == description_of.end() ? "" : ": " + it->second->error));
      }
      ex.descriptions.push_back(it->second->text);
    }
    solved.push_back(make_solved_instance(ex, *ont.find(ex.image->event_name)));
  }

  // Work units: one per image batch (genearl) or per object (alpaca).
  std::vector<InstanceBatch> units;
  if (genearl) {
    units = group_by_image(eval);
  } else {
    for (const auto& inst : eval) units.push_back({inst});
  }
  std::vector<std::vector<Prediction>> results(units.size());
  std::vector<std::string> unit_errors(units.size());
  auto errors = parallel_for(units.size(), config_.parallelism, [&](std::size_t u) {
    const InstanceBatch& batch = units[u];
    const CaptionRecord* cap = caption_of.at(batch.front().image->id);
    if (!cap->ok()) {
      unit_errors[u] = "no caption: " + cap->error;
      return;
    }
    std::vector<std::string> texts;
    for (const auto& inst : batch) {
      const DescriptionRecord* d =
          description_of.at(key_of(inst.image->id, inst.object->id, inst.event->name));
      if (!d->ok()) {
        unit_errors[u] = "no description for object '" + inst.object->id + "': " + d->error;
        return;
      }
      texts.push_back(d->text);
    }
    if (genearl) {
      results[u] = label_batch(batch, cap->text, texts, solved, backend("llm"), templates_);
    } else {
      results[u] = {label_alpaca(batch.front(), cap->text, texts.front(), backend("scorer"),
                                 templates_)};
    }
  });

  std::size_t failed = 0;
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (errors[u]) unit_errors[u] = message_of(errors[u]);
    if (!unit_errors[u].empty()) {
      ++failed;
      const std::string object = genearl ? "" : units[u].front().object->id;
      out.failures.push_back({"label", units[u].front().image->id, object, unit_errors[u]});
      spdlog::warn("labeling image '{}' failed: {}", units[u].front().image->id, unit_errors[u]);
      continue;
    }
    for (auto& p : results[u]) out.predictions.push_back(std::move(p));
  }

  out.metadata = base_metadata();
  std::vector<std::string> ex_list;
  for (const auto& ex : exemplars) ex_list.push_back(ex.image->id);
  out.metadata["exemplar_image_ids"] = ex_list;
  out.metadata["instances"] = eval.size();
  out.metadata["units"] = units.size();
  out.metadata["failed_units"] = failed;
  return out;
}

PredictionSet RunSession::run_per_object() {
  const auto instances = build_instances(inputs_.dataset, inputs_.ontology, &warnings_,
                                         config_.event_predictions ? &event_override_ : nullptr);
  PredictionSet out;
  std::vector<std::optional<Prediction>> results(instances.size());
  auto errors = parallel_for(instances.size(), config_.parallelism, [&](std::size_t i) {
    results[i] = label_direct_gvlm(instances[i], backend("gvlm"), templates_);
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (errors[i]) {
      ++failed;
      out.failures.push_back({"label", instances[i].image->id, instances[i].object->id,
                              message_of(errors[i])});
      continue;
    }
    out.predictions.push_back(std::move(*results[i]));
  }
  out.metadata = base_metadata();
  out.metadata["exemplar_image_ids"] = json::array();
  out.metadata["instances"] = instances.size();
  out.metadata["units"] = instances.size();
  out.metadata["failed_units"] = failed;
  return out;
}

PredictionSet RunSession::run_embedding_baseline() {
  const auto instances = build_instances(inputs_.dataset, inputs_.ontology, &warnings_,
                                         config_.event_predictions ? &event_override_ : nullptr);
  BaselineOptions opts;
  opts.templates = &templates_;
  opts.parallelism = config_.parallelism;
  PredictionSet out = run_baseline(instances, backend("embed"), opts);
  out.metadata = base_metadata();
  out.metadata["exemplar_image_ids"] = json::array();
  out.metadata["instances"] = instances.size();
  out.metadata["units"] = instances.size();
  out.metadata["failed_units"] = 0;
  return out;
}

PredictionSet RunSession::detect() {
  validate_for_detect(config_);
  const std::string started = utc_now();
  std::vector<const ImageRecord*> images;
  for (const auto& img : inputs_.dataset.images) images.push_back(&img);

  PredictionSet out;
  if (config_.detector == Detector::Clip) {
    BaselineOptions opts;
    opts.templates = &templates_;
    opts.parallelism = config_.parallelism;
    out.event_predictions =
        detect_events_clip(images, inputs_.ontology, backend("embed"), opts, &out.failures);
  } else {
    const StageOptions stage{config_.parallelism, &templates_};
    const auto captions = caption_images(images, backend("gvlm"), stage, &out.failures);
    std::vector<std::optional<EventPrediction>> results(captions.size());
    auto errors = parallel_for(captions.size(), config_.parallelism, [&](std::size_t i) {
      if (!captions[i].ok()) return;
      results[i] = detect_event_generative(captions[i], inputs_.ontology, backend("llm"), templates_);
    });
    for (std::size_t i = 0; i < captions.size(); ++i) {
      if (errors[i]) {
        out.failures.push_back({"detect", captions[i].image_id, "", message_of(errors[i])});
      } else if (results[i]) {
        out.event_predictions.push_back(std::move(*results[i]));
      }
    }
  }
  out.metadata = base_metadata();
  out.metadata["task"] = "event-detection";
  out.metadata["detector"] = config_.detector == Detector::Clip ? "clip" : "generative";
  out.metadata["units"] = images.size();
  out.metadata["failed_units"] = images.size() - out.event_predictions.size();
  out.metadata["timestamps"] = {{"started_at", started}, {"finished_at", utc_now()}};
  validate(out);
  return out;
}

PredictionSet run_earl(const RunConfig& config) {
  RunSession session(config);
  return session.run();
}

}  // namespace genearl
