#include "genearl/http_backend.hpp"

#include <algorithm>
#include <cstdlib>

#include <httplib.h>

#include "genearl/digest.hpp"
#include "genearl/error.hpp"
#include "genearl/text.hpp"

namespace genearl {

using nlohmann::json;

OpenAICompatibleBackend::OpenAICompatibleBackend(BackendConfig config)
    : config_(std::move(config)) {
  const std::string& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.size() == scheme_end + 3) {
    throw ConfigError("backend base_url must look like http(s)://host[:port][/path], got '" +
                      url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();

  if (!config_.credential_env.empty()) {
    const char* key = std::getenv(config_.credential_env.c_str());
    if (!key || !*key) {
      throw ConfigError("credential variable " + config_.credential_env + " is not set");
    }
    api_key_ = key;
  }
  timeout_s_ = config_.options.value("timeout_s", 60);
}

bool OpenAICompatibleBackend::supports(Operation op) const {
  const std::string& p = config_.provider;
  if (p == "openai-chat") return op == Operation::Generate || op == Operation::Chat;
  if (p == "openai-completions") return op == Operation::Chat || op == Operation::Score;
  if (p == "openai-embeddings") return op == Operation::EmbedText;
  return false;
}

json OpenAICompatibleBackend::post(const std::string& route, const json& body) const {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_s_);
  client.set_read_timeout(timeout_s_);
  client.set_write_timeout(timeout_s_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string path = prefix_ + route;
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError("POST " + origin_ + path + " failed: " + httplib::to_string(res.error()),
                       true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw BackendError("POST " + path + " returned HTTP " + std::to_string(res->status), true);
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError("POST " + path + " returned HTTP " + std::to_string(res->status) + ": " +
                       res->body.substr(0, 300));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw ContractError("unparseable response from " + path + ": " + e.what());
  }
}

namespace {

// Splits prompt text into content parts, putting each image where its
// "{{image:N}}" marker sits.
json content_parts(const Request& request, double padding) {
  json parts = json::array();
  std::string pending;
  auto flush = [&] {
    if (!pending.empty()) parts.push_back({{"type", "text"}, {"text", pending}});
    pending.clear();
  };
  std::size_t i = 0;
  const std::string& t = request.text;
  while (i < t.size()) {
    const auto open = t.find("{{image:", i);
    if (open == std::string::npos) {
      pending += t.substr(i);
      break;
    }
    const auto close = t.find("}}", open);
    if (close == std::string::npos) {
      pending += t.substr(i);
      break;
    }
    pending += t.substr(i, open - i);
    const std::size_t n = std::stoul(t.substr(open + 8, close - open - 8));
    if (n == 0 || n > request.images.size()) {
      throw ValidationError("image marker " + std::to_string(n) + " has no image");
    }
    flush();
    const ImagePayload payload = load_image_payload(request.images[n - 1], padding);
    parts.push_back({{"type", "image_url"},
                     {"image_url",
                      {{"url", "data:" + payload.mime_type + ";base64," +
                                   base64_encode(payload.bytes)}}}});
    i = close + 2;
  }
  flush();
  return parts;
}

std::string first_choice_text(const json& doc, bool chat) {
  try {
    const json& choice = doc.at("choices").at(0);
    const json& content = chat ? choice.at("message").at("content") : choice.at("text");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const json::exception& e) {
    throw ContractError(std::string("malformed completion response: ") + e.what());
  }
}

}  // namespace

Response OpenAICompatibleBackend::chat_completion(const Request& request) const {
  json message = {{"role", "user"}};
  if (request.images.empty()) {
    message["content"] = request.text;
  } else {
    message["content"] = content_parts(request, config_.crop_padding);
  }
  const json body = {{"model", config_.model},
                     {"temperature", config_.decoding.temperature},
                     {"max_tokens", config_.decoding.max_output_tokens},
                     {"messages", json::array({message})}};
  Response r;
  r.text = first_choice_text(post("/chat/completions", body), true);
  return r;
}

Response OpenAICompatibleBackend::text_completion(const Request& request) const {
  const json body = {{"model", config_.model},
                     {"temperature", config_.decoding.temperature},
                     {"max_tokens", config_.decoding.max_output_tokens},
                     {"prompt", request.text}};
  Response r;
  r.text = first_choice_text(post("/completions", body), false);
  return r;
}

// Score of a candidate = summed log-probability of its tokens when appended
// to the prompt, read back through echo.
Response OpenAICompatibleBackend::score(const Request& request) const {
  if (!request.images.empty()) {
    throw CapabilityError("provider " + config_.provider + " cannot score multimodal prompts");
  }
  Response r;
  for (const auto& candidate : request.items) {
    const std::string prompt = request.text + " " + candidate;
    const json body = {{"model", config_.model}, {"prompt", prompt},  {"max_tokens", 0},
                       {"echo", true},           {"logprobs", 0},    {"temperature", 0.0}};
    const json doc = post("/completions", body);
    double total = 0.0;
    try {
      const json& lp = doc.at("choices").at(0).at("logprobs");
      const json& offsets = lp.at("text_offset");
      const json& logprobs = lp.at("token_logprobs");
      for (std::size_t i = 0; i < offsets.size() && i < logprobs.size(); ++i) {
        if (offsets[i].get<std::size_t>() < request.text.size()) continue;
        if (!logprobs[i].is_null()) total += logprobs[i].get<double>();
      }
    } catch (const json::exception& e) {
      throw ContractError(std::string("completion response lacks echoed logprobs: ") + e.what());
    }
    r.scores.push_back(total);
  }
  return r;
}

Response OpenAICompatibleBackend::embeddings(const Request& request) const {
  const json doc = post("/embeddings", {{"model", config_.model}, {"input", request.items}});
  Response r;
  try {
    std::vector<std::pair<std::size_t, std::vector<double>>> rows;
    for (const auto& row : doc.at("data")) {
      rows.emplace_back(row.value("index", rows.size()),
                        row.at("embedding").get<std::vector<double>>());
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, v] : rows) r.vectors.emplace_back(std::move(v));
  } catch (const json::exception& e) {
    throw ContractError(std::string("malformed embeddings response: ") + e.what());
  }
  return r;
}

Response OpenAICompatibleBackend::dispatch(const Request& request) {
  if (!supports(request.op)) {
    throw CapabilityError("provider " + config_.provider + " does not support " +
                          std::string(to_string(request.op)));
  }
  switch (request.op) {
    case Operation::Generate: return chat_completion(request);
    case Operation::Chat:
      return config_.provider == "openai-completions" ? text_completion(request)
                                                      : chat_completion(request);
    case Operation::Score: return score(request);
    case Operation::EmbedText: return embeddings(request);
    case Operation::EmbedRegion: break;
  }
  throw CapabilityError("unsupported operation");
}

}  // namespace genearl
