#include "support.hpp"

#include <atomic>
#include <fstream>

#include <unistd.h>

#include "genearl/json_io.hpp"

namespace genearl::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("genearl-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

Ontology toy_ontology() {
  Ontology o;
  o.name = "toy";
  o.events = {
      {"Arrest", "[Agent] arrested [Person] using [Instrument]",
       {{"Agent", "the arresting agent"}, {"Person", "the person arrested"},
        {"Instrument", "the instrument used"}}},
      {"Payment", "[Giver] gave [Money] to [Recipient]",
       {{"Giver", "the donating agent"}, {"Recipient", "the recipient"}, {"Money", ""}}},
      {"Meet", "", {{"Participant", "a party in the meeting"}}},
  };
  return o;
}

fs::path synthetic_dataset_path() { return data_path("data/synthetic/dataset.json"); }
fs::path m2e2_ontology_path() { return data_path("data/ontologies/m2e2.json"); }

Ontology synthetic_ontology() {
  return filter_min_roles(exclude_role(load_ontology(m2e2_ontology_path()), "place"), 3);
}

Dataset synthetic_dataset(const Ontology& ontology) {
  return load_dataset(synthetic_dataset_path(), ontology);
}

nlohmann::json oracle_config(const fs::path& out_dir, const fs::path& cache_dir) {
  const nlohmann::json oracle = {{"provider", "mock-oracle"}};
  return {{"dataset", synthetic_dataset_path().string()},
          {"ontology", m2e2_ontology_path().string()},
          {"method", "genearl"},
          {"seed", 11},
          {"output_dir", out_dir.string()},
          {"cache_dir", cache_dir.string()},
          {"parallelism", 2},
          {"backends", {{"gvlm", oracle}, {"llm", oracle}, {"scorer", oracle}, {"embed", oracle}}}};
}

}  // namespace genearl::testing
