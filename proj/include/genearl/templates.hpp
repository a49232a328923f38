#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genearl/dataset.hpp"
#include "genearl/ontology.hpp"

namespace genearl {

// What the vision-language model sees when describing an object.
enum class PromptMode {
  Full,               // event image + object crop + event and roles
  NoEventImage,       // object crop + event and roles
  ObjectCaptionOnly,  // object crop only
};

std::string_view to_string(PromptMode mode);
// Accepts "full", "no-event-image", "object-caption".
PromptMode parse_prompt_mode(std::string_view name);

// One image position of a multimodal prompt. `crop` selects a region of the
// referenced image; the backend layer crops before dispatch.
struct ImageSlot {
  std::string image_ref;
  std::optional<BBox> crop;

  friend bool operator==(const ImageSlot&, const ImageSlot&) = default;
};

// Text carries one "{{image:N}}" marker per image, N 1-based in `images` order.
struct MultimodalPrompt {
  std::vector<ImageSlot> images;
  std::string text;
  // Legal answers when the prompt asks for a choice (direct labeling).
  std::vector<std::string> answer_vocabulary;

  // `text` without the image-marker lines and surrounding blank lines.
  std::string instruction() const;
  // Throws ValidationError unless 1 <= |images| <= 2, text is non-empty and
  // the markers are exactly {{image:1}}..{{image:|images|}} in order.
  void validate() const;
};

struct TextPrompt {
  std::string text;
  std::size_t expected_object_count = 0;  // 0 for non-labeling prompts
  std::vector<std::string> role_vocabulary;
};

// A fully labeled exemplar image as shown inside a k-shot prompt.
struct SolvedInstance {
  std::string caption;
  std::string event_name;
  std::string role_block;
  std::vector<std::string> descriptions;
  std::vector<std::string> gold_roles;
};

using SlotMap = std::map<std::string, std::string, std::less<>>;

// Replaces every "{name}" with slots.at(name). "{{...}}" sequences are copied
// through untouched. Slot values are inserted verbatim and never re-scanned.
// Throws ValidationError for a placeholder with no value.
std::string fill_slots(std::string_view tmpl, const SlotMap& slots);

// Named prompt templates. The built-in set is compiled from templates/*.txt;
// a directory of same-named files can override any of them.
class TemplateSet {
 public:
  static const TemplateSet& builtin();
  // Built-in templates overlaid with every *.txt file in `dir` (name = stem).
  static TemplateSet with_overrides(const std::filesystem::path& dir);

  const std::string& get(std::string_view name) const;
  std::string render(std::string_view name, const SlotMap& slots) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

MultimodalPrompt render_gvlm_description_prompt(const Instance& instance, PromptMode mode,
                                                const std::string& role_block,
                                                const TemplateSet& ts = TemplateSet::builtin());

MultimodalPrompt render_image_caption_prompt(const ImageRecord& image,
                                             const TemplateSet& ts = TemplateSet::builtin());

// Zero exemplars renders the zero-shot template; otherwise the k-shot
// template with one solved block per exemplar, in order. Objects are
// numbered from 1 in each block.
TextPrompt render_llm_labeling_prompt(const std::string& caption, const EventType& event,
                                      const std::string& role_block,
                                      const std::vector<std::string>& descriptions,
                                      const std::vector<SolvedInstance>& exemplars,
                                      const TemplateSet& ts = TemplateSet::builtin());

TextPrompt render_alpaca_prompt(const std::string& caption, const EventType& event,
                                const std::string& role_block, const std::string& description,
                                const TemplateSet& ts = TemplateSet::builtin());

// The option list is `role_block` plus a trailing "- Other" line.
MultimodalPrompt render_gvlm_direct_earl_prompt(const Instance& instance,
                                                const std::string& role_block,
                                                const TemplateSet& ts = TemplateSet::builtin());

TextPrompt render_event_detection_prompt(const std::string& caption, const Ontology& ontology,
                                         const TemplateSet& ts = TemplateSet::builtin());

std::string render_similarity_template(const ArgumentRole& role, const EventType& event,
                                       const TemplateSet& ts = TemplateSet::builtin());

std::string render_event_similarity_template(const EventType& event,
                                             const TemplateSet& ts = TemplateSet::builtin());

}  // namespace genearl
