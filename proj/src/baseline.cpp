#include "genearl/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "genearl/error.hpp"
#include "genearl/parallel.hpp"
#include "genearl/text.hpp"

namespace genearl {

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dimension() != v.dimension()) {
    throw ValidationError("cosine of vectors with dimensions " + std::to_string(u.dimension()) +
                          " and " + std::to_string(v.dimension()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  const auto& a = u.values();
  const auto& b = v.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    nu += a[i] * a[i];
    nv += b[i] * b[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<SimilarityScore> similarity_scores(const EmbeddingVector& query,
                                               const LabeledVectors& templates) {
  std::vector<SimilarityScore> out;
  out.reserve(templates.size());
  for (const auto& [label, vec] : templates) out.push_back({label, cosine_similarity(query, vec)});
  return out;
}

std::string classify_zero_shot(const EmbeddingVector& object_vec,
                               const LabeledVectors& role_templates) {
  if (role_templates.empty()) throw ValidationError("no templates to classify against");
  const auto scores = similarity_scores(object_vec, role_templates);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].value > scores[best].value) best = i;
  }
  return scores[best].label;
}

std::string detect_event_clip(const EmbeddingVector& image_vec,
                              const LabeledVectors& event_templates) {
  return classify_zero_shot(image_vec, event_templates);
}

namespace {

std::string key_list(const std::vector<std::string>& keys) {
  constexpr std::size_t kShown = 20;
  std::vector<std::string> shown(keys.begin(),
                                 keys.begin() + static_cast<long>(std::min(kShown, keys.size())));
  std::string s = text::join(shown, ", ");
  if (keys.size() > kShown) s += ", ... (" + std::to_string(keys.size() - kShown) + " more)";
  return s;
}

}  // namespace

PredictionSet run_baseline(const std::vector<Instance>& instances, Backend& embedder,
                           const BaselineOptions& options) {
  PredictionSet out;
  std::vector<std::string> missing;

  // Role templates, one embedding batch per event.
  std::map<std::string, LabeledVectors> templates_by_event;
  for (const auto& inst : instances) {
    if (templates_by_event.count(inst.event->name)) continue;
    std::vector<std::string> texts;
    for (const auto& role : inst.event->roles) {
      texts.push_back(render_similarity_template(role, *inst.event, *options.templates));
    }
    LabeledVectors labeled;
    try {
      auto vectors = embed_text(embedder, texts);
      for (std::size_t i = 0; i < vectors.size(); ++i) {
        labeled.emplace_back(inst.event->roles[i].name, std::move(vectors[i]));
      }
    } catch (const MissingEmbeddingError&) {
      // Find every missing template, not just the first.
      for (const auto& t : texts) {
        try {
          embed_text(embedder, {t});
        } catch (const MissingEmbeddingError&) {
          missing.push_back(t);
        }
      }
    }
    templates_by_event.emplace(inst.event->name, std::move(labeled));
  }

  std::vector<std::optional<EmbeddingVector>> regions(instances.size());
  std::vector<std::string> region_missing(instances.size());
  std::mutex mu;
  auto errors = parallel_for(instances.size(), options.parallelism, [&](std::size_t i) {
    if (options.excluded_images.count(instances[i].image->id)) return;
    try {
      regions[i] = embed_region(embedder, *instances[i].image, *instances[i].object);
    } catch (const MissingEmbeddingError& e) {
      std::lock_guard lock(mu);
      region_missing[i] = e.key();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    if (!region_missing[i].empty()) missing.push_back(region_missing[i]);
  }
  if (!missing.empty()) {
    throw InputError("missing embeddings for " + std::to_string(missing.size()) +
                     " keys: " + key_list(missing));
  }

  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!regions[i]) continue;
    const Instance& inst = instances[i];
    const LabeledVectors& templates = templates_by_event.at(inst.event->name);
    const auto scores = similarity_scores(*regions[i], templates);
    Prediction p;
    p.image_id = inst.image->id;
    p.object_id = inst.object->id;
    p.predicted_role = classify_zero_shot(*regions[i], templates);
    nlohmann::json raw = nlohmann::json::object();
    for (const auto& s : scores) raw[s.label] = s.value;
    p.raw_response = raw.dump();
    p.method = std::string(to_string(Method::Baseline));
    out.predictions.push_back(std::move(p));
  }
  return out;
}

PredictionSet run_baseline(const Dataset& dataset, const Ontology& ontology, Backend& embedder,
                           const BaselineOptions& options) {
  return run_baseline(build_instances(dataset, ontology), embedder, options);
}

std::vector<EventPrediction> detect_events_clip(const std::vector<const ImageRecord*>& images,
                                                const Ontology& ontology, Backend& embedder,
                                                const BaselineOptions& options,
                                                std::vector<StageFailure>* failures) {
  if (ontology.events.empty()) throw ValidationError("event detection needs a non-empty ontology");
  std::vector<std::string> texts;
  for (const auto& e : ontology.events) {
    texts.push_back(render_event_similarity_template(e, *options.templates));
  }
  LabeledVectors templates;
  auto vectors = embed_text(embedder, texts);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    templates.emplace_back(ontology.events[i].name, std::move(vectors[i]));
  }

  std::vector<std::optional<EventPrediction>> slots(images.size());
  auto errors = parallel_for(images.size(), options.parallelism, [&](std::size_t i) {
    const EmbeddingVector v = embed_image(embedder, *images[i]);
    nlohmann::json raw = nlohmann::json::object();
    for (const auto& s : similarity_scores(v, templates)) raw[s.label] = s.value;
    slots[i] = EventPrediction{images[i]->id, detect_event_clip(v, templates), raw.dump()};
  });
  std::vector<EventPrediction> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (errors[i]) {
      std::string message;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const BackendError& e) {
        message = e.what();
      }
      if (!failures) throw BackendError("image '" + images[i]->id + "': " + message);
      failures->push_back({"detect", images[i]->id, "", message});
      continue;
    }
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace genearl
