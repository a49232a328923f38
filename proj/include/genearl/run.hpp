#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genearl/backend_factory.hpp"
#include "genearl/backends.hpp"
#include "genearl/dataset.hpp"
#include "genearl/ontology.hpp"
#include "genearl/pipeline.hpp"
#include "genearl/templates.hpp"

namespace genearl {

enum class Detector { Generative, Clip };

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path ontology;
  std::optional<std::filesystem::path> manifest;
  Method method = Method::Genearl;
  std::size_t shots = 0;
  PromptMode mode = PromptMode::Full;
  std::uint64_t seed = 0;
  std::size_t min_roles = 3;
  std::vector<std::string> excluded_roles = {"place"};
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path output_dir = "out";
  bool include_exemplars_in_eval = false;
  std::optional<std::filesystem::path> templates_dir;
  std::size_t parallelism = 4;  // concurrent work units
  // Label under the events of this prediction file instead of the gold events.
  std::optional<std::filesystem::path> event_predictions;
  Detector detector = Detector::Generative;
  // Keyed by pipeline role: gvlm, llm, scorer, embed.
  std::map<std::string, BackendConfig> backends;
};

// Relative paths in `doc` are resolved against `base_dir`. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

// Throws ConfigError unless the backends the method (or detector) needs are
// present with matching kinds and shots are only used by genearl.
void validate_for_run(const RunConfig& config);
void validate_for_detect(const RunConfig& config);

struct PreparedInputs {
  Ontology ontology;  // after role exclusion and the min_roles filter
  Dataset dataset;
};

// exclude_role for each excluded role, then filter_min_roles, then load the
// dataset against the filtered ontology.
PreparedInputs prepare_inputs(const std::filesystem::path& dataset,
                              const std::filesystem::path& ontology, std::size_t min_roles,
                              const std::vector<std::string>& excluded_roles,
                              const std::optional<std::filesystem::path>& manifest = {});

// Owns the prepared inputs and the decorated backends of one run.
class RunSession {
 public:
  // `archive` receives every request and response when given.
  explicit RunSession(RunConfig config, std::shared_ptr<ResponseArchive> archive = nullptr);
  RunSession(const RunSession&) = delete;
  RunSession& operator=(const RunSession&) = delete;

  const RunConfig& config() const { return config_; }
  const PreparedInputs& inputs() const { return inputs_; }
  const TemplateSet& templates() const { return templates_; }

  PredictionSet run();     // EARL predictions with the configured method
  PredictionSet detect();  // per-image event predictions

  // Calls that reached a raw backend, summed over all backends.
  std::size_t dispatches() const;
  // Per backend role: dispatches and cache statistics.
  nlohmann::json dispatch_summary() const;

 private:
  Backend& backend(const std::string& role);
  nlohmann::json base_metadata() const;
  PredictionSet run_generative();
  PredictionSet run_per_object();
  PredictionSet run_embedding_baseline();

  RunConfig config_;
  PreparedInputs inputs_;
  TemplateSet templates_;
  std::shared_ptr<ResponseArchive> archive_;
  std::map<std::string, BackendStack> stacks_;
  std::map<std::string, std::string> event_override_;
  std::vector<std::string> warnings_;
};

// Convenience: a session without an archive.
PredictionSet run_earl(const RunConfig& config);

}  // namespace genearl
