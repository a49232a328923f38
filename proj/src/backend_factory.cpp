#include "genearl/backend_factory.hpp"

#include "genearl/error.hpp"
#include "genearl/http_backend.hpp"
#include "genearl/mock_backends.hpp"

namespace genearl {

BackendPtr make_raw_backend(const BackendConfig& config, const Dataset* gold,
                            const TemplateSet& templates) {
  const std::string& p = config.provider;
  if (p == "mock-scripted") return std::make_shared<ScriptedBackend>(config);
  if (p == "mock-constant") return std::make_shared<ConstantBackend>(config);
  if (p == "mock-failing") return std::make_shared<FailingBackend>(config);
  if (p == "embedding-sidecar") return std::make_shared<SidecarEmbeddingBackend>(config);
  if (p == "mock-oracle") {
    if (!gold) throw ConfigError("mock-oracle backend needs gold annotations");
    return std::make_shared<OracleBackend>(config, *gold, templates);
  }
  if (p == "openai-chat" || p == "openai-completions" || p == "openai-embeddings") {
    return std::make_shared<OpenAICompatibleBackend>(config);
  }
  throw ConfigError("unknown backend provider '" + p + "'");
}

BackendStack make_backend_stack(BackendPtr raw,
                                const std::optional<std::filesystem::path>& cache_dir,
                                std::shared_ptr<ResponseArchive> archive) {
  BackendStack stack;
  stack.counter = std::make_shared<CountingBackend>(std::move(raw));
  BackendPtr h = with_retries(with_parallelism_limit(stack.counter));
  if (cache_dir) {
    stack.cache = std::make_shared<CachingBackend>(std::move(h), *cache_dir);
    h = stack.cache;
  }
  if (archive) h = with_archive(std::move(h), std::move(archive));
  stack.handle = std::move(h);
  return stack;
}

}  // namespace genearl
