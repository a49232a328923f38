#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "genearl/backends.hpp"
#include "genearl/dataset.hpp"
#include "genearl/ontology.hpp"
#include "genearl/templates.hpp"

namespace genearl {

// Base for in-process backends: owns the config and counts dispatches.
class LocalBackend : public Backend {
 public:
  explicit LocalBackend(BackendConfig config) : config_(std::move(config)) {}

  const BackendConfig& config() const override { return config_; }
  Response dispatch(const Request& request) final {
    ++calls_;
    return respond(request);
  }
  std::size_t calls() const { return calls_.load(); }

 protected:
  virtual Response respond(const Request& request) = 0;

 private:
  BackendConfig config_;
  std::atomic<std::size_t> calls_{0};
};

// Canned responses keyed by prompt_digest(request). A request with no entry
// gets the default response, or a non-transient BackendError when none is set.
//
// options: {"responses": {digest: text | {"text", "scores"}}, "default": text,
//           "script": path to a JSON file with the same two keys}
class ScriptedBackend : public LocalBackend {
 public:
  explicit ScriptedBackend(BackendConfig config);

  void set(const std::string& digest, Response response);
  void set_text(const std::string& digest, const std::string& text);
  void set_default(Response response);
  bool supports(Operation op) const override;

 protected:
  Response respond(const Request& request) override;

 private:
  void load(const nlohmann::json& doc);

  mutable std::mutex mu_;
  std::unordered_map<std::string, Response> responses_;
  std::optional<Response> default_;
};

// Answers from gold annotations. Generated captions and descriptions carry
// markers ("oracle-image[<image>]", "oracle-ref[<image>|<object>]") so that
// later stages can recover the gold answer from the prompt text alone:
//   Generate, one uncropped image -> caption naming the image and its event
//   Generate, cropped object      -> description containing the gold role
//                                    (or the bare role when a vocabulary is set)
//   Chat, labeling prompt         -> "Argument Role of Object i: <gold>" lines
//   Chat, event detection         -> the gold event name
//   Score                         -> 1 for the gold candidate, 0 otherwise
//   EmbedText                     -> deterministic pseudo-random vector per text
//   EmbedRegion                   -> the vector of the gold role's (or, for a
//                                    whole image, the gold event's) template
//
// options: {"dimension": 16}
class OracleBackend : public LocalBackend {
 public:
  OracleBackend(BackendConfig config, const Dataset& gold,
                const TemplateSet& templates = TemplateSet::builtin());

  bool supports(Operation) const override { return true; }

  static std::string image_marker(const std::string& image_id);
  static std::string object_marker(const std::string& image_id, const std::string& object_id);
  std::vector<double> text_vector(const std::string& text) const;

 protected:
  Response respond(const Request& request) override;

 private:
  struct GoldObject {
    std::string image_id;
    std::string object_id;
    std::string event;
    std::string role;  // empty when unannotated
  };
  const GoldObject* find_region(const ImageSlot& slot) const;
  const GoldObject* find_ref(const std::string& image_id, const std::string& object_id) const;
  std::string role_for_description_line(const std::string& line) const;
  Response respond_generate(const Request& request) const;
  Response respond_chat(const Request& request) const;
  Response respond_score(const Request& request) const;
  Response respond_region(const Request& request) const;

  std::map<std::string, std::string> image_events_;  // image id -> event
  std::map<std::string, std::string> image_refs_;    // image ref -> image id
  std::vector<GoldObject> objects_;
  std::vector<BBox> boxes_;  // parallel to objects_
  const TemplateSet& templates_;
  std::size_t dimension_;
};

// Fixed answers regardless of input.
// options: {"text": ..., "scores": [...], "vector": [...]}; an operation is
// supported when its answer is configured.
class ConstantBackend : public LocalBackend {
 public:
  explicit ConstantBackend(BackendConfig config);
  bool supports(Operation op) const override;

 protected:
  Response respond(const Request& request) override;

 private:
  std::optional<std::string> text_;
  std::optional<std::vector<double>> scores_;
  std::optional<std::vector<double>> vector_;
};

// Fails the first `fail_times` calls (all calls when negative), then answers
// like a ConstantBackend.
// options: {"fail_times": -1, "transient": true, "message": ..., "then": {...}}
class FailingBackend : public LocalBackend {
 public:
  explicit FailingBackend(BackendConfig config);
  bool supports(Operation op) const override;

 protected:
  Response respond(const Request& request) override;

 private:
  long long fail_times_;
  bool transient_;
  std::string message_;
  std::atomic<long long> failures_{0};
  std::unique_ptr<ConstantBackend> then_;
};

// Embedding lookups from a sidecar file, one JSON record per line:
//   {"scope": "object", "key": "<image id>/<object id>", "vector": [...]}
//   {"scope": "text",   "key": "<text>",                 "vector": [...]}
//   {"scope": "image",  "key": "<image id>",             "vector": [...]}
// options: {"path": sidecar file}
class SidecarEmbeddingBackend : public LocalBackend {
 public:
  explicit SidecarEmbeddingBackend(BackendConfig config);
  SidecarEmbeddingBackend(BackendConfig config, const std::filesystem::path& path);

  bool supports(Operation op) const override;
  std::size_t size() const { return objects_.size() + texts_.size() + images_.size(); }

 protected:
  Response respond(const Request& request) override;

 private:
  void load(const std::filesystem::path& path);

  std::unordered_map<std::string, EmbeddingVector> objects_;
  std::unordered_map<std::string, EmbeddingVector> texts_;
  std::unordered_map<std::string, EmbeddingVector> images_;
};

// Writes a sidecar file in the format SidecarEmbeddingBackend reads.
struct SidecarRecord {
  std::string scope;
  std::string key;
  std::vector<double> vector;
};
void write_sidecar(const std::filesystem::path& path, const std::vector<SidecarRecord>& records);

}  // namespace genearl
