#include "genearl/pipeline.hpp"

#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/labels.hpp"
#include "genearl/parallel.hpp"
#include "genearl/text.hpp"

namespace genearl {

using nlohmann::json;

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Genearl: return "genearl";
    case Method::DirectGvlm: return "direct-gvlm";
    case Method::Alpaca: return "alpaca";
    case Method::Baseline: return "baseline";
  }
  return "genearl";
}

Method parse_method(std::string_view name) {
  const std::string n = text::to_lower(text::trim(name));
  if (n == "genearl") return Method::Genearl;
  if (n == "direct-gvlm") return Method::DirectGvlm;
  if (n == "alpaca") return Method::Alpaca;
  if (n == "baseline") return Method::Baseline;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected genearl, direct-gvlm, alpaca or baseline)");
}

// --- PredictionSet -----------------------------------------------------------

const Prediction* PredictionSet::find(std::string_view image_id,
                                      std::string_view object_id) const {
  for (const auto& p : predictions) {
    if (p.image_id == image_id && p.object_id == object_id) return &p;
  }
  return nullptr;
}

std::optional<std::string> PredictionSet::event_for(std::string_view image_id) const {
  for (const auto& e : event_predictions) {
    if (e.image_id == image_id) return e.event;
  }
  return std::nullopt;
}

void validate(const PredictionSet& set) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : set.predictions) {
    if (!seen.emplace(p.image_id, p.object_id).second) {
      throw ValidationError("duplicate prediction for object '" + p.object_id + "' of image '" +
                            p.image_id + "'");
    }
  }
  std::set<std::string> images;
  for (const auto& e : set.event_predictions) {
    if (!images.insert(e.image_id).second) {
      throw ValidationError("duplicate event prediction for image '" + e.image_id + "'");
    }
  }
}

json to_json(const PredictionSet& set, bool with_timestamps) {
  json meta = set.metadata;
  if (!with_timestamps && meta.is_object()) meta.erase("timestamps");
  json preds = json::array();
  for (const auto& p : set.predictions) {
    preds.push_back({{"image_id", p.image_id},
                     {"object_id", p.object_id},
                     {"predicted_role", p.predicted_role},
                     {"method", p.method},
                     {"shots", p.shots},
                     {"raw_response", p.raw_response},
                     {"warnings", p.warnings}});
  }
  json events = json::array();
  for (const auto& e : set.event_predictions) {
    events.push_back({{"image_id", e.image_id}, {"event", e.event}, {"raw_response", e.raw_response}});
  }
  json failures = json::array();
  for (const auto& f : set.failures) {
    failures.push_back({{"stage", f.stage},
                        {"image_id", f.image_id},
                        {"object_id", f.object_id},
                        {"message", f.message}});
  }
  return {{"metadata", meta},
          {"predictions", preds},
          {"event_predictions", events},
          {"failures", failures}};
}

PredictionSet prediction_set_from_json(const json& doc, const std::string& source) {
  using json_io::require_array;
  using json_io::require_string;
  if (!doc.is_object()) throw ParseError(source, "prediction file must be an object");
  PredictionSet set;
  set.metadata = doc.value("metadata", json::object());
  try {
    if (doc.contains("predictions")) {
      const json& preds = require_array(doc, "predictions", source);
      for (std::size_t i = 0; i < preds.size(); ++i) {
        const std::string ctx = source + ".predictions[" + std::to_string(i) + "]";
        Prediction p;
        p.image_id = json_io::identifier(json_io::require(preds[i], "image_id", ctx), ctx + ".image_id");
        p.object_id =
            json_io::identifier(json_io::require(preds[i], "object_id", ctx), ctx + ".object_id");
        p.predicted_role = require_string(preds[i], "predicted_role", ctx);
        p.method = preds[i].value("method", std::string{});
        p.shots = preds[i].value("shots", std::size_t{0});
        p.raw_response = preds[i].value("raw_response", std::string{});
        p.warnings = preds[i].value("warnings", std::vector<std::string>{});
        set.predictions.push_back(std::move(p));
      }
    }
    if (doc.contains("event_predictions")) {
      const json& events = require_array(doc, "event_predictions", source);
      for (std::size_t i = 0; i < events.size(); ++i) {
        const std::string ctx = source + ".event_predictions[" + std::to_string(i) + "]";
        EventPrediction e;
        e.image_id =
            json_io::identifier(json_io::require(events[i], "image_id", ctx), ctx + ".image_id");
        e.event = require_string(events[i], "event", ctx);
        e.raw_response = events[i].value("raw_response", std::string{});
        set.event_predictions.push_back(std::move(e));
      }
    }
    if (doc.contains("failures")) {
      for (const auto& f : require_array(doc, "failures", source)) {
        set.failures.push_back({f.value("stage", std::string{}), f.value("image_id", std::string{}),
                                f.value("object_id", std::string{}),
                                f.value("message", std::string{})});
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(source, e.what());
  }
  validate(set);
  return set;
}

PredictionSet load_prediction_set(const std::filesystem::path& path) {
  return prediction_set_from_json(json_io::read(path), path.string());
}

// --- stages ------------------------------------------------------------------

std::size_t argmax_first(const std::vector<double>& scores) {
  if (scores.empty()) throw ValidationError("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

namespace {

constexpr std::size_t kExcerptLimit = 2000;

std::string excerpt(const std::string& s) {
  return s.size() <= kExcerptLimit ? s : s.substr(0, kExcerptLimit) + "...";
}

// Re-throws the in-flight exception with `context` prefixed, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ContextOverflowError& e) {
    throw ContextOverflowError(context + ": " + e.what(), e.estimated_tokens(), e.budget_tokens());
  } catch (const CapabilityError& e) {
    throw CapabilityError(context + ": " + e.what());
  } catch (const BackendError& e) {
    throw BackendError(context + ": " + e.what(), e.transient(), e.attempts());
  } catch (const InputError& e) {
    throw InputError(context + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(context + ": " + e.what());
  }
}

std::string message_of(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

json backend_tag(const Backend& b) {
  return {{"provider", b.config().provider}, {"model", b.config().model}};
}

std::vector<std::string> with_other(std::vector<std::string> roles) {
  roles.emplace_back(kOtherLabel);
  return roles;
}

}  // namespace

std::vector<CaptionRecord> caption_images(const std::vector<const ImageRecord*>& images,
                                          Backend& gvlm, const StageOptions& options,
                                          std::vector<StageFailure>* failures) {
  std::vector<CaptionRecord> out(images.size());
  auto errors = parallel_for(images.size(), options.parallelism, [&](std::size_t i) {
    const ImageRecord& img = *images[i];
    const MultimodalPrompt prompt = render_image_caption_prompt(img, *options.templates);
    out[i].image_id = img.id;
    out[i].prompt_digest = prompt_digest(generate_request(prompt));
    out[i].text = generate(gvlm, prompt);
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    if (!failures) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (...) {
        rethrow_with_context("caption of image '" + images[i]->id + "'");
      }
    }
    out[i].image_id = images[i]->id;
    out[i].text.clear();
    out[i].error = message_of(errors[i]);
    failures->push_back({"caption", images[i]->id, "", out[i].error});
    spdlog::warn("caption of image '{}' failed: {}", images[i]->id, out[i].error);
  }
  return out;
}

std::vector<DescriptionRecord> describe_objects(const std::vector<Instance>& instances,
                                                Backend& gvlm, PromptMode mode,
                                                const StageOptions& options,
                                                std::vector<StageFailure>* failures) {
  std::vector<DescriptionRecord> out(instances.size());
  auto errors = parallel_for(instances.size(), options.parallelism, [&](std::size_t i) {
    const Instance& inst = instances[i];
    DescriptionRecord& rec = out[i];
    rec.image_id = inst.image->id;
    rec.object_id = inst.object->id;
    rec.event_name = inst.event->name;
    rec.mode = mode;
    rec.backend = backend_tag(gvlm);
    const MultimodalPrompt prompt = render_gvlm_description_prompt(
        inst, mode, role_definition_block(*inst.event), *options.templates);
    rec.prompt_digest = prompt_digest(generate_request(prompt));
    rec.text = generate(gvlm, prompt);
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    DescriptionRecord& rec = out[i];
    rec.image_id = instances[i].image->id;
    rec.object_id = instances[i].object->id;
    rec.text.clear();
    rec.error = message_of(errors[i]);
    if (failures) failures->push_back({"describe", rec.image_id, rec.object_id, rec.error});
    spdlog::warn("description of object '{}' in image '{}' failed: {}", rec.object_id,
                 rec.image_id, rec.error);
  }
  return out;
}

SolvedInstance make_solved_instance(const ExemplarImage& exemplar, const EventType& event) {
  if (!exemplar.caption) {
    throw ValidationError("exemplar image '" + exemplar.image->id + "' has no caption");
  }
  if (exemplar.descriptions.size() != exemplar.image->objects.size()) {
    throw ValidationError("exemplar image '" + exemplar.image->id +
                          "' needs one description per object");
  }
  SolvedInstance s;
  s.caption = *exemplar.caption;
  s.event_name = event.name;
  s.role_block = role_definition_block(event);
  s.descriptions = exemplar.descriptions;
  for (const auto& obj : exemplar.image->objects) {
    if (!obj.gold_role) {
      throw ValidationError("exemplar object '" + obj.id + "' of image '" + exemplar.image->id +
                            "' has no gold role");
    }
    s.gold_roles.push_back(*obj.gold_role);
  }
  return s;
}

std::vector<Prediction> label_batch(const InstanceBatch& batch, const std::string& caption,
                                    const std::vector<std::string>& descriptions,
                                    const std::vector<SolvedInstance>& exemplars, Backend& llm,
                                    const TemplateSet& templates) {
  if (batch.empty()) return {};
  if (descriptions.size() != batch.size()) {
    throw ValidationError("batch of " + std::to_string(batch.size()) + " objects has " +
                          std::to_string(descriptions.size()) + " descriptions");
  }
  const EventType& event = *batch.front().event;
  const TextPrompt prompt = render_llm_labeling_prompt(
      caption, event, role_definition_block(event), descriptions, exemplars, templates);
  const std::string response = chat(llm, prompt);
  ParsedLabels parsed =
      parse_labels_detailed(response, prompt.expected_object_count, prompt.role_vocabulary);
  for (const auto& w : parsed.warnings) {
    spdlog::warn("image '{}': {}", batch.front().image->id, w);
  }
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Prediction p;
    p.image_id = batch[i].image->id;
    p.object_id = batch[i].object->id;
    p.predicted_role = parsed.labels[i];
    p.raw_response = excerpt(response);
    p.method = std::string(to_string(Method::Genearl));
    p.shots = exemplars.size();
    p.warnings = parsed.warnings;
    out.push_back(std::move(p));
  }
  return out;
}

Prediction label_alpaca(const Instance& instance, const std::string& caption,
                        const std::string& description, Backend& scorer,
                        const TemplateSet& templates) {
  const TextPrompt prompt = render_alpaca_prompt(
      caption, *instance.event, role_definition_block(*instance.event), description, templates);
  const std::vector<std::string> candidates = with_other(instance.candidate_roles);
  const std::vector<double> scores = score_candidates(scorer, prompt, candidates);
  Prediction p;
  p.image_id = instance.image->id;
  p.object_id = instance.object->id;
  p.predicted_role = candidates[argmax_first(scores)];
  json raw = json::object();
  for (std::size_t i = 0; i < candidates.size(); ++i) raw[candidates[i]] = scores[i];
  p.raw_response = raw.dump();
  p.method = std::string(to_string(Method::Alpaca));
  return p;
}

Prediction label_direct_gvlm(const Instance& instance, Backend& gvlm,
                             const TemplateSet& templates) {
  const MultimodalPrompt prompt =
      render_gvlm_direct_earl_prompt(instance, role_definition_block(*instance.event), templates);
  const std::vector<std::string> candidates = with_other(instance.candidate_roles);
  Prediction p;
  p.image_id = instance.image->id;
  p.object_id = instance.object->id;
  p.method = std::string(to_string(Method::DirectGvlm));
  if (gvlm.supports(Operation::Score)) {
    const std::vector<double> scores = score_candidates(gvlm, prompt, candidates);
    p.predicted_role = candidates[argmax_first(scores)];
    json raw = json::object();
    for (std::size_t i = 0; i < candidates.size(); ++i) raw[candidates[i]] = scores[i];
    p.raw_response = raw.dump();
    return p;
  }
  const std::string response = generate(gvlm, prompt);
  p.predicted_role = normalize_label(response, candidates);
  p.raw_response = excerpt(response);
  if (text::iequals(p.predicted_role, kOtherLabel) &&
      !text::iequals(text::trim(response), kOtherLabel)) {
    p.warnings.push_back("answer '" + excerpt(response) + "' names no single candidate role");
  }
  return p;
}

EventPrediction detect_event_generative(const CaptionRecord& caption, const Ontology& ontology,
                                        Backend& llm, const TemplateSet& templates) {
  const TextPrompt prompt = render_event_detection_prompt(caption.text, ontology, templates);
  const std::string response = chat(llm, prompt);
  return {caption.image_id, normalize_answer(response, prompt.role_vocabulary, kUnknownEvent),
          excerpt(response)};
}

}  // namespace genearl
