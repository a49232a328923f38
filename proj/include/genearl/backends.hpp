#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "genearl/dataset.hpp"
#include "genearl/templates.hpp"

namespace genearl {

// Role a backend plays in the pipeline.
enum class BackendKind { GvlmGenerate, LlmChat, LlmScore, Embed };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);  // gvlm | chat | score | embed

enum class Operation { Generate, Chat, Score, EmbedText, EmbedRegion };

std::string_view to_string(Operation op);

struct DecodingParams {
  double temperature = 0.0;
  std::size_t max_output_tokens = 256;
};

struct BackendConfig {
  BackendKind kind = BackendKind::LlmChat;
  // mock-scripted | mock-oracle | mock-constant | mock-failing |
  // embedding-sidecar | openai-chat | openai-completions | openai-embeddings
  std::string provider;
  std::string base_url;
  std::string credential_env;  // name of the environment variable holding the key
  std::string model;
  DecodingParams decoding;
  std::size_t context_budget_tokens = 0;  // 0 disables the guard
  double chars_per_token = 4.0;
  std::size_t image_token_cost = 256;
  std::size_t max_retries = 3;
  std::chrono::milliseconds retry_backoff{500};
  std::size_t parallelism = 4;
  double crop_padding = 0.0;
  nlohmann::json options = nlohmann::json::object();  // provider specific
};

BackendConfig backend_config_from_json(const nlohmann::json& doc, const std::string& ctx);
nlohmann::json to_json(const BackendConfig& config);

// Finite, non-empty real vector.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);  // throws ContractError

  const std::vector<double>& values() const { return values_; }
  std::size_t dimension() const { return values_.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

// Provider-neutral request. Everything here is part of the prompt payload and
// therefore of the cache key.
struct Request {
  Operation op = Operation::Chat;
  std::string text;
  std::vector<ImageSlot> images;
  std::vector<std::string> items;       // Score: candidates; EmbedText: texts
  std::size_t expected_count = 0;       // labeling prompts
  std::vector<std::string> vocabulary;  // legal answers, when constrained
  std::string region_key;               // EmbedRegion: "<image>/<object>" or "<image>"
};

struct Response {
  std::string text;
  std::vector<double> scores;
  std::vector<EmbeddingVector> vectors;
};

nlohmann::json to_json(const Request& request);
nlohmann::json to_json(const Response& response);
Response response_from_json(const nlohmann::json& doc);

// Digest of the prompt payload alone (no model, no decoding parameters, no
// image bytes). Scripted mocks are keyed by it.
std::string prompt_digest(const Request& request);

// Content-addressed key: backend kind, provider, model, decoding parameters
// and the full payload including a digest of every referenced image file.
std::string cache_key(const BackendConfig& config, const Request& request);

// ceil(chars / chars_per_token) + image_token_cost per image. For Score
// requests the longest candidate is added to the text.
std::size_t estimate_tokens(const BackendConfig& config, const Request& request);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendConfig& config() const = 0;
  virtual bool supports(Operation op) const = 0;
  virtual Response dispatch(const Request& request) = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

// The provider-neutral requests the typed entry points below dispatch.
Request generate_request(const MultimodalPrompt& prompt);
Request chat_request(const TextPrompt& prompt);

// Typed entry points. Each checks capability and the context budget before
// dispatch and validates the response shape after.
std::string generate(Backend& backend, const MultimodalPrompt& prompt);
std::string chat(Backend& backend, const TextPrompt& prompt);
std::vector<double> score_candidates(Backend& backend, const TextPrompt& prompt,
                                     const std::vector<std::string>& candidates);
std::vector<double> score_candidates(Backend& backend, const MultimodalPrompt& prompt,
                                     const std::vector<std::string>& candidates);
std::vector<EmbeddingVector> embed_text(Backend& backend, const std::vector<std::string>& texts);
EmbeddingVector embed_region(Backend& backend, const ImageRecord& image,
                             const ObjectRegion& object);
// Whole-image embedding (region key = image id, no crop).
EmbeddingVector embed_image(Backend& backend, const ImageRecord& image);

// --- decorators --------------------------------------------------------------

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t invalidated = 0;
};

// Consults `cache_dir` before dispatch and stores every successful response.
// One file per key; entries are never rewritten once valid. A corrupt entry is
// removed, refetched and logged.
class CachingBackend : public Backend {
 public:
  CachingBackend(BackendPtr inner, std::filesystem::path cache_dir);

  const BackendConfig& config() const override { return inner_->config(); }
  bool supports(Operation op) const override { return inner_->supports(op); }
  Response dispatch(const Request& request) override;

  CacheStats stats() const;
  std::filesystem::path entry_path(const std::string& key) const;

 private:
  BackendPtr inner_;
  std::filesystem::path dir_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> invalidated_{0};
};

// Retries transient BackendErrors up to config().max_retries times with
// exponential backoff. Exhaustion throws a BackendError carrying the attempt count.
class RetryingBackend : public Backend {
 public:
  explicit RetryingBackend(BackendPtr inner);

  const BackendConfig& config() const override { return inner_->config(); }
  bool supports(Operation op) const override { return inner_->supports(op); }
  Response dispatch(const Request& request) override;

 private:
  BackendPtr inner_;
};

// Bounds the number of in-flight requests to config().parallelism.
class ConcurrencyLimitedBackend : public Backend {
 public:
  explicit ConcurrencyLimitedBackend(BackendPtr inner);
  ~ConcurrencyLimitedBackend() override;

  const BackendConfig& config() const override { return inner_->config(); }
  bool supports(Operation op) const override { return inner_->supports(op); }
  Response dispatch(const Request& request) override;

  std::size_t peak_in_flight() const;

 private:
  struct Gate;
  BackendPtr inner_;
  std::unique_ptr<Gate> gate_;
};

// Append-only record of every request and response of a run: prompts.jsonl
// and responses.jsonl under one directory, lines linked by sequence number.
class ResponseArchive {
 public:
  explicit ResponseArchive(std::filesystem::path dir);
  ~ResponseArchive();
  ResponseArchive(const ResponseArchive&) = delete;
  ResponseArchive& operator=(const ResponseArchive&) = delete;

  void record(const BackendConfig& config, const Request& request, const Response* response,
              const std::string& error);
  std::size_t size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class ArchivingBackend : public Backend {
 public:
  ArchivingBackend(BackendPtr inner, std::shared_ptr<ResponseArchive> archive);

  const BackendConfig& config() const override { return inner_->config(); }
  bool supports(Operation op) const override { return inner_->supports(op); }
  Response dispatch(const Request& request) override;

 private:
  BackendPtr inner_;
  std::shared_ptr<ResponseArchive> archive_;
};

// Counts calls that reach the wrapped backend. Placed directly above the raw
// backend it counts real dispatches, including retried attempts.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(BackendPtr inner) : inner_(std::move(inner)) {}

  const BackendConfig& config() const override { return inner_->config(); }
  bool supports(Operation op) const override { return inner_->supports(op); }
  Response dispatch(const Request& request) override {
    ++count_;
    return inner_->dispatch(request);
  }

  std::size_t dispatches() const { return count_.load(); }

 private:
  BackendPtr inner_;
  std::atomic<std::size_t> count_{0};
};

BackendPtr with_cache(BackendPtr backend, const std::filesystem::path& cache_dir);
BackendPtr with_retries(BackendPtr backend);
BackendPtr with_parallelism_limit(BackendPtr backend);
BackendPtr with_archive(BackendPtr backend, std::shared_ptr<ResponseArchive> archive);

// --- image payloads ----------------------------------------------------------

struct ImagePayload {
  std::string bytes;
  std::string mime_type;
};

// Reads the referenced image; with a crop, decodes it, cuts the bbox (grown by
// `padding` pixels per side, clipped to the image) and re-encodes as PNG.
// Throws InputError for unreadable images or boxes outside the image.
ImagePayload load_image_payload(const ImageSlot& slot, double padding = 0.0);

}  // namespace genearl
