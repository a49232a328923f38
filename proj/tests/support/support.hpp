#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genearl/dataset.hpp"
#include "genearl/ontology.hpp"

namespace genearl::testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(GENEARL_SOURCE_DIR); }
inline fs::path data_path(const std::string& rel) { return source_dir() / rel; }

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& content);

// Two events with disjoint role names plus one with a single role.
Ontology toy_ontology();

// The shipped synthetic fixture (20 images, 3 objects each) and ontology.
fs::path synthetic_dataset_path();
fs::path m2e2_ontology_path();
Ontology synthetic_ontology();  // m2e2 minus "place", events with >= 3 roles
Dataset synthetic_dataset(const Ontology& ontology);

// A run config document using the oracle mock for every backend role.
nlohmann::json oracle_config(const fs::path& out_dir, const fs::path& cache_dir);

}  // namespace genearl::testing
