#include "genearl/backends.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "genearl/digest.hpp"
#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/text.hpp"

namespace genearl {

using nlohmann::json;

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::GvlmGenerate: return "gvlm";
    case BackendKind::LlmChat: return "chat";
    case BackendKind::LlmScore: return "score";
    case BackendKind::Embed: return "embed";
  }
  return "chat";
}

BackendKind parse_backend_kind(std::string_view name) {
  const std::string n = text::to_lower(text::trim(name));
  if (n == "gvlm") return BackendKind::GvlmGenerate;
  if (n == "chat") return BackendKind::LlmChat;
  if (n == "score") return BackendKind::LlmScore;
  if (n == "embed") return BackendKind::Embed;
  throw ConfigError("unknown backend kind '" + std::string(name) + "'");
}

std::string_view to_string(Operation op) {
  switch (op) {
    case Operation::Generate: return "generate";
    case Operation::Chat: return "chat";
    case Operation::Score: return "score";
    case Operation::EmbedText: return "embed_text";
    case Operation::EmbedRegion: return "embed_region";
  }
  return "chat";
}

BackendConfig backend_config_from_json(const json& doc, const std::string& ctx) {
  if (!doc.is_object()) throw ConfigError(ctx + ": backend section must be an object");
  BackendConfig c;
  try {
    c.kind = parse_backend_kind(json_io::require_string(doc, "kind", ctx));
    c.provider = json_io::require_string(doc, "provider", ctx);
    c.base_url = doc.value("base_url", std::string{});
    c.credential_env = doc.value("credential_env", std::string{});
    c.model = doc.value("model", c.provider);
    c.decoding.temperature = doc.value("temperature", c.decoding.temperature);
    c.decoding.max_output_tokens = doc.value("max_output_tokens", c.decoding.max_output_tokens);
    c.context_budget_tokens = doc.value("context_budget_tokens", c.context_budget_tokens);
    c.chars_per_token = doc.value("chars_per_token", c.chars_per_token);
    c.image_token_cost = doc.value("image_token_cost", c.image_token_cost);
    c.max_retries = doc.value("max_retries", c.max_retries);
    c.retry_backoff = std::chrono::milliseconds(
        doc.value("retry_backoff_ms", static_cast<long long>(c.retry_backoff.count())));
    c.parallelism = doc.value("parallelism", c.parallelism);
    c.crop_padding = doc.value("crop_padding", c.crop_padding);
    if (doc.contains("options")) c.options = doc.at("options");
  } catch (const json::exception& e) {
    throw ConfigError(ctx + ": " + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  if (c.chars_per_token <= 0) throw ConfigError(ctx + ": chars_per_token must be positive");
  if (c.parallelism == 0) throw ConfigError(ctx + ": parallelism must be at least 1");
  if (c.decoding.temperature < 0) throw ConfigError(ctx + ": temperature must be >= 0");
  return c;
}

json to_json(const BackendConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"provider", c.provider},
          {"base_url", c.base_url},
          {"credential_env", c.credential_env},
          {"model", c.model},
          {"temperature", c.decoding.temperature},
          {"max_output_tokens", c.decoding.max_output_tokens},
          {"context_budget_tokens", c.context_budget_tokens},
          {"chars_per_token", c.chars_per_token},
          {"image_token_cost", c.image_token_cost},
          {"max_retries", c.max_retries},
          {"retry_backoff_ms", c.retry_backoff.count()},
          {"parallelism", c.parallelism},
          {"crop_padding", c.crop_padding},
          {"options", c.options}};
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ContractError("embedding vector is empty");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractError("embedding vector has a non-finite value");
  }
}

namespace {

json slot_json(const ImageSlot& s) {
  json crop = nullptr;
  if (s.crop) crop = {s.crop->x, s.crop->y, s.crop->width, s.crop->height};
  return {{"ref", s.image_ref}, {"crop", crop}};
}

// Image files are hashed once per process per path.
std::string image_digest(const std::string& ref) {
  static std::mutex mu;
  static std::unordered_map<std::string, std::string> memo;
  {
    std::lock_guard lock(mu);
    auto it = memo.find(ref);
    if (it != memo.end()) return it->second;
  }
  std::string digest;
  std::error_code ec;
  if (std::filesystem::is_regular_file(ref, ec)) {
    digest = "sha256:" + sha256_file_hex(ref);
  } else {
    digest = "unresolved:" + ref;
  }
  std::lock_guard lock(mu);
  memo.emplace(ref, digest);
  return digest;
}

}  // namespace

json to_json(const Request& r) {
  json images = json::array();
  for (const auto& s : r.images) images.push_back(slot_json(s));
  return {{"op", to_string(r.op)},
          {"text", r.text},
          {"images", images},
          {"items", r.items},
          {"expected_count", r.expected_count},
          {"vocabulary", r.vocabulary},
          {"region_key", r.region_key}};
}

json to_json(const Response& r) {
  json vectors = json::array();
  for (const auto& v : r.vectors) vectors.push_back(v.values());
  return {{"text", r.text}, {"scores", r.scores}, {"vectors", vectors}};
}

Response response_from_json(const json& doc) {
  Response r;
  r.text = doc.at("text").get<std::string>();
  r.scores = doc.at("scores").get<std::vector<double>>();
  for (const auto& v : doc.at("vectors")) r.vectors.emplace_back(v.get<std::vector<double>>());
  return r;
}

std::string prompt_digest(const Request& request) {
  return sha256_hex(to_json(request).dump());
}

std::string cache_key(const BackendConfig& config, const Request& request) {
  json images = json::array();
  for (const auto& s : request.images) images.push_back(image_digest(s.image_ref));
  const json keyed = {{"kind", to_string(config.kind)},
                      {"provider", config.provider},
                      {"model", config.model},
                      {"temperature", config.decoding.temperature},
                      {"max_output_tokens", config.decoding.max_output_tokens},
                      {"crop_padding", config.crop_padding},
                      {"request", to_json(request)},
                      {"image_digests", images}};
  return sha256_hex(keyed.dump());
}

std::size_t estimate_tokens(const BackendConfig& config, const Request& request) {
  std::size_t chars = request.text.size();
  if (request.op == Operation::Score) {
    std::size_t longest = 0;
    for (const auto& c : request.items) longest = std::max(longest, c.size() + 1);
    chars += longest;
  } else if (request.op == Operation::EmbedText) {
    for (const auto& t : request.items) chars += t.size();
  }
  const auto text_tokens =
      static_cast<std::size_t>(std::ceil(static_cast<double>(chars) / config.chars_per_token));
  return text_tokens + request.images.size() * config.image_token_cost;
}

namespace {

Response checked_dispatch(Backend& backend, const Request& request) {
  const auto& cfg = backend.config();
  if (!backend.supports(request.op)) {
    throw CapabilityError("backend '" + cfg.model + "' (" + cfg.provider + ") does not support " +
                          std::string(to_string(request.op)));
  }
  if (cfg.context_budget_tokens > 0) {
    const std::size_t estimate = estimate_tokens(cfg, request);
    if (estimate > cfg.context_budget_tokens) {
      throw ContextOverflowError("prompt needs ~" + std::to_string(estimate) +
                                     " tokens, budget is " +
                                     std::to_string(cfg.context_budget_tokens),
                                 estimate, cfg.context_budget_tokens);
    }
  }
  return backend.dispatch(request);
}

std::string require_text(const Response& r, const BackendConfig& cfg) {
  if (text::trim(r.text).empty()) {
    throw EmptyResponseError("backend '" + cfg.model + "' returned an empty completion");
  }
  return r.text;
}

std::vector<double> require_scores(Response r, std::size_t n) {
  if (r.scores.size() != n) {
    throw ContractError("expected " + std::to_string(n) + " scores, got " +
                        std::to_string(r.scores.size()));
  }
  for (double s : r.scores) {
    if (!std::isfinite(s)) throw ContractError("non-finite candidate score");
  }
  return std::move(r.scores);
}

}  // namespace

Request generate_request(const MultimodalPrompt& prompt) {
  Request req;
  req.op = Operation::Generate;
  req.text = prompt.text;
  req.images = prompt.images;
  req.vocabulary = prompt.answer_vocabulary;
  return req;
}

Request chat_request(const TextPrompt& prompt) {
  Request req;
  req.op = Operation::Chat;
  req.text = prompt.text;
  req.expected_count = prompt.expected_object_count;
  req.vocabulary = prompt.role_vocabulary;
  return req;
}

std::string generate(Backend& backend, const MultimodalPrompt& prompt) {
  prompt.validate();
  return require_text(checked_dispatch(backend, generate_request(prompt)), backend.config());
}

std::string chat(Backend& backend, const TextPrompt& prompt) {
  if (text::trim(prompt.text).empty()) throw ValidationError("chat prompt is empty");
  return require_text(checked_dispatch(backend, chat_request(prompt)), backend.config());
}

std::vector<double> score_candidates(Backend& backend, const TextPrompt& prompt,
                                     const std::vector<std::string>& candidates) {
  if (candidates.empty()) throw ValidationError("score_candidates needs at least one candidate");
  Request req;
  req.op = Operation::Score;
  req.text = prompt.text;
  req.items = candidates;
  req.expected_count = prompt.expected_object_count;
  req.vocabulary = prompt.role_vocabulary;
  return require_scores(checked_dispatch(backend, req), candidates.size());
}

std::vector<double> score_candidates(Backend& backend, const MultimodalPrompt& prompt,
                                     const std::vector<std::string>& candidates) {
  if (candidates.empty()) throw ValidationError("score_candidates needs at least one candidate");
  prompt.validate();
  Request req;
  req.op = Operation::Score;
  req.text = prompt.text;
  req.images = prompt.images;
  req.items = candidates;
  req.vocabulary = prompt.answer_vocabulary;
  return require_scores(checked_dispatch(backend, req), candidates.size());
}

std::vector<EmbeddingVector> embed_text(Backend& backend, const std::vector<std::string>& texts) {
  if (texts.empty()) throw ValidationError("embed_text needs at least one text");
  Request req;
  req.op = Operation::EmbedText;
  req.items = texts;
  Response r = checked_dispatch(backend, req);
  if (r.vectors.size() != texts.size()) {
    throw ContractError("expected " + std::to_string(texts.size()) + " embeddings, got " +
                        std::to_string(r.vectors.size()));
  }
  for (const auto& v : r.vectors) {
    if (v.dimension() != r.vectors.front().dimension()) {
      throw ContractError("embedding batch has mixed dimensions");
    }
  }
  return std::move(r.vectors);
}

namespace {
EmbeddingVector single_vector(Response r) {
  if (r.vectors.size() != 1) {
    throw ContractError("expected one embedding, got " + std::to_string(r.vectors.size()));
  }
  return std::move(r.vectors.front());
}
}  // namespace

EmbeddingVector embed_region(Backend& backend, const ImageRecord& image,
                             const ObjectRegion& object) {
  Request req;
  req.op = Operation::EmbedRegion;
  req.images = {{image.image_ref, object.bbox}};
  req.region_key = image.id + "/" + object.id;
  return single_vector(checked_dispatch(backend, req));
}

EmbeddingVector embed_image(Backend& backend, const ImageRecord& image) {
  Request req;
  req.op = Operation::EmbedRegion;
  req.images = {{image.image_ref, std::nullopt}};
  req.region_key = image.id;
  return single_vector(checked_dispatch(backend, req));
}

// --- CachingBackend ----------------------------------------------------------

namespace {
std::mutex& key_stripe(const std::string& key) {
  static std::array<std::mutex, 64> stripes;
  return stripes[std::hash<std::string>{}(key) % stripes.size()];
}
}  // namespace

CachingBackend::CachingBackend(BackendPtr inner, std::filesystem::path cache_dir)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path CachingBackend::entry_path(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

Response CachingBackend::dispatch(const Request& request) {
  const std::string key = cache_key(inner_->config(), request);
  const auto path = entry_path(key);

  auto try_read = [&]() -> std::optional<Response> {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
      const json entry = json_io::read(path);
      if (entry.at("key").get<std::string>() != key) throw Error("key mismatch");
      return response_from_json(entry.at("response"));
    } catch (const std::exception& e) {
      spdlog::warn("cache entry {} is corrupt ({}); refetching", path.string(), e.what());
      std::filesystem::remove(path, ec);
      ++invalidated_;
      return std::nullopt;
    }
  };

  if (auto hit = try_read()) {
    ++hits_;
    return *hit;
  }
  std::lock_guard lock(key_stripe(key));
  if (auto hit = try_read()) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  Response response = inner_->dispatch(request);
  const auto& cfg = inner_->config();
  const json entry = {{"key", key},
                      {"backend",
                       {{"kind", to_string(cfg.kind)},
                        {"provider", cfg.provider},
                        {"model", cfg.model},
                        {"temperature", cfg.decoding.temperature},
                        {"max_output_tokens", cfg.decoding.max_output_tokens}}},
                      {"request", to_json(request)},
                      {"response", to_json(response)}};
  json_io::write_atomic(path, entry.dump(2) + "\n");
  return response;
}

CacheStats CachingBackend::stats() const { return {hits_.load(), misses_.load(), invalidated_.load()}; }

// --- RetryingBackend ---------------------------------------------------------

RetryingBackend::RetryingBackend(BackendPtr inner) : inner_(std::move(inner)) {}

Response RetryingBackend::dispatch(const Request& request) {
  const auto& cfg = inner_->config();
  const std::size_t max_attempts = cfg.max_retries + 1;
  for (std::size_t attempt = 1;; ++attempt) {
    try {
      return inner_->dispatch(request);
    } catch (const BackendError& e) {
      if (!e.transient()) throw;
      if (attempt >= max_attempts) {
        throw BackendError(std::string(e.what()) + " (gave up after " + std::to_string(attempt) +
                               " attempts)",
                           false, attempt);
      }
      spdlog::debug("transient backend failure (attempt {}/{}): {}", attempt, max_attempts,
                    e.what());
      const auto delay = cfg.retry_backoff * (1LL << std::min<std::size_t>(attempt - 1, 16));
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
  }
}

// --- ConcurrencyLimitedBackend ----------------------------------------------

struct ConcurrencyLimitedBackend::Gate {
  std::mutex mu;
  std::condition_variable cv;
  std::size_t in_flight = 0;
  std::size_t peak = 0;
};

ConcurrencyLimitedBackend::ConcurrencyLimitedBackend(BackendPtr inner)
    : inner_(std::move(inner)), gate_(std::make_unique<Gate>()) {}

ConcurrencyLimitedBackend::~ConcurrencyLimitedBackend() = default;

Response ConcurrencyLimitedBackend::dispatch(const Request& request) {
  const std::size_t limit = std::max<std::size_t>(1, inner_->config().parallelism);
  {
    std::unique_lock lock(gate_->mu);
    gate_->cv.wait(lock, [&] { return gate_->in_flight < limit; });
    ++gate_->in_flight;
    gate_->peak = std::max(gate_->peak, gate_->in_flight);
  }
  struct Release {
    Gate& g;
    ~Release() {
      {
        std::lock_guard lock(g.mu);
        --g.in_flight;
      }
      g.cv.notify_one();
    }
  } release{*gate_};
  return inner_->dispatch(request);
}

std::size_t ConcurrencyLimitedBackend::peak_in_flight() const {
  std::lock_guard lock(gate_->mu);
  return gate_->peak;
}

// --- archive -----------------------------------------------------------------

struct ResponseArchive::Impl {
  std::mutex mu;
  std::ofstream prompts;
  std::ofstream responses;
  std::size_t seq = 0;
};

ResponseArchive::ResponseArchive(std::filesystem::path dir) : impl_(std::make_unique<Impl>()) {
  std::filesystem::create_directories(dir);
  impl_->prompts.open(dir / "prompts.jsonl", std::ios::app);
  impl_->responses.open(dir / "responses.jsonl", std::ios::app);
  if (!impl_->prompts || !impl_->responses) {
    throw InputError("cannot open archive files under " + dir.string());
  }
}

ResponseArchive::~ResponseArchive() = default;

void ResponseArchive::record(const BackendConfig& config, const Request& request,
                             const Response* response, const std::string& error) {
  const std::string digest = prompt_digest(request);
  std::lock_guard lock(impl_->mu);
  const std::size_t seq = ++impl_->seq;
  const json backend = {{"kind", to_string(config.kind)},
                        {"provider", config.provider},
                        {"model", config.model}};
  impl_->prompts << json{{"seq", seq}, {"backend", backend}, {"prompt_digest", digest},
                         {"request", to_json(request)}}
                        .dump()
                 << '\n';
  json line = {{"seq", seq}, {"prompt_digest", digest}};
  line["response"] = response ? to_json(*response) : json(nullptr);
  if (!error.empty()) line["error"] = error;
  impl_->responses << line.dump() << '\n';
  impl_->prompts.flush();
  impl_->responses.flush();
}

std::size_t ResponseArchive::size() const {
  std::lock_guard lock(impl_->mu);
  return impl_->seq;
}

ArchivingBackend::ArchivingBackend(BackendPtr inner, std::shared_ptr<ResponseArchive> archive)
    : inner_(std::move(inner)), archive_(std::move(archive)) {}

Response ArchivingBackend::dispatch(const Request& request) {
  try {
    Response r = inner_->dispatch(request);
    archive_->record(inner_->config(), request, &r, {});
    return r;
  } catch (const std::exception& e) {
    archive_->record(inner_->config(), request, nullptr, e.what());
    throw;
  }
}

BackendPtr with_cache(BackendPtr backend, const std::filesystem::path& cache_dir) {
  return std::make_shared<CachingBackend>(std::move(backend), cache_dir);
}
BackendPtr with_retries(BackendPtr backend) {
  return std::make_shared<RetryingBackend>(std::move(backend));
}
BackendPtr with_parallelism_limit(BackendPtr backend) {
  return std::make_shared<ConcurrencyLimitedBackend>(std::move(backend));
}
BackendPtr with_archive(BackendPtr backend, std::shared_ptr<ResponseArchive> archive) {
  return std::make_shared<ArchivingBackend>(std::move(backend), std::move(archive));
}

}  // namespace genearl
