#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "genearl/backends.hpp"
#include "genearl/dataset.hpp"
#include "genearl/templates.hpp"

namespace genearl {

// Builds the raw backend named by config.provider. The oracle mock answers
// from `gold`, which is required for that provider.
BackendPtr make_raw_backend(const BackendConfig& config, const Dataset* gold = nullptr,
                            const TemplateSet& templates = TemplateSet::builtin());

// A raw backend with the standard decorators, outermost first:
// archive -> cache -> retry -> parallelism limit -> counter -> raw.
struct BackendStack {
  BackendPtr handle;
  std::shared_ptr<CountingBackend> counter;
  std::shared_ptr<CachingBackend> cache;  // null without a cache dir
};

BackendStack make_backend_stack(BackendPtr raw,
                                const std::optional<std::filesystem::path>& cache_dir,
                                std::shared_ptr<ResponseArchive> archive = nullptr);

}  // namespace genearl
