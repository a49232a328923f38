#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "genearl/backends.hpp"
#include "genearl/dataset.hpp"
#include "genearl/ontology.hpp"
#include "genearl/templates.hpp"

namespace genearl {

enum class Method { Genearl, DirectGvlm, Alpaca, Baseline };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);  // genearl | direct-gvlm | alpaca | baseline

// Event name reported when detection cannot match any ontology event.
inline constexpr std::string_view kUnknownEvent = "Unknown";

struct CaptionRecord {
  std::string image_id;
  std::string text;
  std::string prompt_digest;
  std::string error;  // set instead of text when generation failed

  bool ok() const { return error.empty(); }
};

struct DescriptionRecord {
  std::string image_id;
  std::string object_id;
  std::string event_name;
  PromptMode mode = PromptMode::Full;
  std::string text;
  std::string prompt_digest;
  nlohmann::json backend = nlohmann::json::object();  // provider and model
  std::string error;

  bool ok() const { return error.empty(); }
};

struct Prediction {
  std::string image_id;
  std::string object_id;
  std::string predicted_role;
  std::string raw_response;  // excerpt
  std::string method;
  std::size_t shots = 0;
  std::vector<std::string> warnings;
};

struct EventPrediction {
  std::string image_id;
  std::string event;
  std::string raw_response;
};

// A unit of work that produced no prediction.
struct StageFailure {
  std::string stage;  // caption | describe | label | detect | embed
  std::string image_id;
  std::string object_id;  // empty for image-level failures
  std::string message;
};

struct PredictionSet {
  std::vector<Prediction> predictions;
  std::vector<EventPrediction> event_predictions;
  std::vector<StageFailure> failures;
  nlohmann::json metadata = nlohmann::json::object();

  const Prediction* find(std::string_view image_id, std::string_view object_id) const;
  std::optional<std::string> event_for(std::string_view image_id) const;
};

// Throws ValidationError when an (image, object) pair or an image's event is
// predicted twice.
void validate(const PredictionSet& set);

// metadata.timestamps is dropped unless `with_timestamps`.
nlohmann::json to_json(const PredictionSet& set, bool with_timestamps = true);
PredictionSet prediction_set_from_json(const nlohmann::json& doc, const std::string& source);
PredictionSet load_prediction_set(const std::filesystem::path& path);

// Index of the largest score; the first one wins ties.
std::size_t argmax_first(const std::vector<double>& scores);

struct StageOptions {
  std::size_t parallelism = 1;
  const TemplateSet* templates = &TemplateSet::builtin();
};

// One caption per image, in order. Without `failures` the first backend error
// propagates with the image id in its message; with it, failed images get a
// record whose `error` is set and the failure is appended.
std::vector<CaptionRecord> caption_images(const std::vector<const ImageRecord*>& images,
                                          Backend& gvlm, const StageOptions& options = {},
                                          std::vector<StageFailure>* failures = nullptr);

// One description per instance, in order, one object per call. Failures never
// stop the stage: the record carries the error (and is appended to
// `failures` when given).
std::vector<DescriptionRecord> describe_objects(const std::vector<Instance>& instances,
                                                Backend& gvlm, PromptMode mode,
                                                const StageOptions& options = {},
                                                std::vector<StageFailure>* failures = nullptr);

// Builds the solved block of an exemplar image labeled with its gold roles.
SolvedInstance make_solved_instance(const ExemplarImage& exemplar, const EventType& event);

// One chat call labels every object of one image. Backend errors propagate.
std::vector<Prediction> label_batch(const InstanceBatch& batch, const std::string& caption,
                                    const std::vector<std::string>& descriptions,
                                    const std::vector<SolvedInstance>& exemplars, Backend& llm,
                                    const TemplateSet& templates = TemplateSet::builtin());

// Scores every candidate role plus "Other" under the single-object prompt and
// takes the argmax (lowest index on ties).
Prediction label_alpaca(const Instance& instance, const std::string& caption,
                        const std::string& description, Backend& scorer,
                        const TemplateSet& templates = TemplateSet::builtin());

// Scores the candidates under the direct multimodal prompt when the backend
// can score; otherwise generates an answer and normalizes it.
Prediction label_direct_gvlm(const Instance& instance, Backend& gvlm,
                             const TemplateSet& templates = TemplateSet::builtin());

// Predicts the event of the captioned image; "Unknown" when the answer names
// no ontology event.
EventPrediction detect_event_generative(const CaptionRecord& caption, const Ontology& ontology,
                                        Backend& llm,
                                        const TemplateSet& templates = TemplateSet::builtin());

}  // namespace genearl
