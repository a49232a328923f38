#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "genearl/backends.hpp"
#include "genearl/dataset.hpp"
#include "genearl/ontology.hpp"
#include "genearl/pipeline.hpp"
#include "genearl/templates.hpp"

namespace genearl {

struct SimilarityScore {
  std::string label;
  double value = 0.0;
};

using LabeledVectors = std::vector<std::pair<std::string, EmbeddingVector>>;

// dot(u, v) / (|u| |v|), clamped to [-1, 1]. Throws ValidationError on a
// dimension mismatch or a zero-norm vector.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

// One score per template, in template order.
std::vector<SimilarityScore> similarity_scores(const EmbeddingVector& query,
                                               const LabeledVectors& templates);

// Label of the most similar template; the first one wins ties. Throws
// ValidationError for an empty template list.
std::string classify_zero_shot(const EmbeddingVector& object_vec,
                               const LabeledVectors& role_templates);
std::string detect_event_clip(const EmbeddingVector& image_vec,
                              const LabeledVectors& event_templates);

struct BaselineOptions {
  const TemplateSet* templates = &TemplateSet::builtin();
  std::set<std::string> excluded_images;
  std::size_t parallelism = 1;
};

// Labels every instance by the role template most similar to its region
// embedding. Throws InputError listing every region or template the backend
// has no embedding for.
PredictionSet run_baseline(const std::vector<Instance>& instances, Backend& embedder,
                           const BaselineOptions& options = {});
PredictionSet run_baseline(const Dataset& dataset, const Ontology& ontology, Backend& embedder,
                           const BaselineOptions& options = {});

// Event per image from whole-image embeddings against the event templates.
// Images without an embedding are reported as failures.
std::vector<EventPrediction> detect_events_clip(const std::vector<const ImageRecord*>& images,
                                                const Ontology& ontology, Backend& embedder,
                                                const BaselineOptions& options,
                                                std::vector<StageFailure>* failures);

}  // namespace genearl
