#pragma once

#include <string>

#include "genearl/backends.hpp"

namespace genearl {

// Adapter for OpenAI-compatible HTTP services. The provider picks the route:
//   openai-chat         POST {base}/chat/completions   Generate, Chat
//   openai-completions  POST {base}/completions        Chat, Score (echo + logprobs)
//   openai-embeddings   POST {base}/embeddings         EmbedText
// Images travel as base64 data URLs in content parts, cropped first when the
// slot carries a bbox. Connection failures, 429 and 5xx are transient.
//
// options: {"timeout_s": 60}
class OpenAICompatibleBackend : public Backend {
 public:
  // Throws ConfigError for a malformed base_url or a credential variable that
  // is named but unset.
  explicit OpenAICompatibleBackend(BackendConfig config);

  const BackendConfig& config() const override { return config_; }
  bool supports(Operation op) const override;
  Response dispatch(const Request& request) override;

 private:
  nlohmann::json post(const std::string& route, const nlohmann::json& body) const;
  Response chat_completion(const Request& request) const;
  Response text_completion(const Request& request) const;
  Response score(const Request& request) const;
  Response embeddings(const Request& request) const;

  BackendConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string prefix_;  // path below the origin, no trailing slash
  std::string api_key_;
  int timeout_s_;
};

}  // namespace genearl
