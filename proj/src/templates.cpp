#include "genearl/templates.hpp"

#include <regex>

#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/text.hpp"

namespace genearl {

// Generated from templates/*.txt at configure time.
const std::map<std::string, std::string>& builtin_template_sources();

std::string_view to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::Full: return "full";
    case PromptMode::NoEventImage: return "no-event-image";
    case PromptMode::ObjectCaptionOnly: return "object-caption";
  }
  return "full";
}

PromptMode parse_prompt_mode(std::string_view name) {
  const std::string n = text::to_lower(text::trim(name));
  if (n == "full") return PromptMode::Full;
  if (n == "no-event-image") return PromptMode::NoEventImage;
  if (n == "object-caption") return PromptMode::ObjectCaptionOnly;
  throw ConfigError("unknown prompt mode '" + std::string(name) +
                    "' (expected full, no-event-image or object-caption)");
}

std::string MultimodalPrompt::instruction() const {
  std::vector<std::string> kept;
  for (auto& line : text::split_lines(text)) {
    if (line.find("{{image:") != std::string::npos) continue;
    if (kept.empty() && text::trim(line).empty()) continue;
    kept.push_back(std::move(line));
  }
  return text::normalize_layout(text::join(kept, "\n"));
}

void MultimodalPrompt::validate() const {
  if (images.empty() || images.size() > 2) {
    throw ValidationError("multimodal prompt needs 1 or 2 images, got " +
                          std::to_string(images.size()));
  }
  if (text::trim(text).empty()) throw ValidationError("multimodal prompt has empty text");
  static const std::regex marker(R"(\{\{image:(\d+)\}\})");
  std::size_t expected = 1;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), marker);
       it != std::sregex_iterator(); ++it, ++expected) {
    if (std::stoul((*it)[1].str()) != expected) {
      throw ValidationError("image markers out of order in prompt text");
    }
  }
  if (expected - 1 != images.size()) {
    throw ValidationError("prompt has " + std::to_string(expected - 1) + " image markers for " +
                          std::to_string(images.size()) + " images");
  }
}

std::string fill_slots(std::string_view tmpl, const SlotMap& slots) {
  std::string out;
  out.reserve(tmpl.size() * 2);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      std::size_t close = tmpl.find("}}", i + 2);
      std::size_t end = close == std::string_view::npos ? tmpl.size() : close + 2;
      out.append(tmpl.substr(i, end - i));
      i = end;
      continue;
    }
    if (c == '{') {
      std::size_t close = tmpl.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw ValidationError("unterminated slot in template");
      }
      std::string_view name = tmpl.substr(i + 1, close - i - 1);
      auto it = slots.find(name);
      if (it == slots.end()) {
        throw ValidationError("no value for template slot '" + std::string(name) + "'");
      }
      out.append(it->second);
      i = close + 1;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = [] {
    TemplateSet ts;
    for (const auto& [name, body] : builtin_template_sources()) {
      ts.templates_[name] = text::normalize_layout(body);
    }
    return ts;
  }();
  return set;
}

TemplateSet TemplateSet::with_overrides(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("template directory not found: " + dir.string());
  TemplateSet ts = builtin();
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    ts.templates_[entry.path().stem().string()] =
        text::normalize_layout(json_io::read_file(entry.path()));
  }
  return ts;
}

const std::string& TemplateSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("unknown template '" + std::string(name) + "'");
  return it->second;
}

std::string TemplateSet::render(std::string_view name, const SlotMap& slots) const {
  return text::normalize_layout(fill_slots(get(name), slots));
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

namespace {

ImageSlot event_image(const Instance& inst) { return {inst.image->image_ref, std::nullopt}; }
ImageSlot object_crop(const Instance& inst) { return {inst.image->image_ref, inst.object->bbox}; }

std::vector<std::string> with_other(std::vector<std::string> roles) {
  roles.emplace_back(kOtherLabel);
  return roles;
}

std::string object_lines(const TemplateSet& ts, const std::vector<std::string>& descriptions) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    lines.push_back(ts.render("llm_object_description",
                              {{"index", std::to_string(i + 1)},
                               {"description", text::collapse_whitespace(descriptions[i])}}));
  }
  return text::join(lines, "\n");
}

std::string answer_stubs(const TemplateSet& ts, std::size_t count) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < count; ++i) {
    lines.push_back(ts.render("llm_answer_stub", {{"index", std::to_string(i + 1)}}));
  }
  return text::join(lines, "\n");
}

std::string solved_block(const TemplateSet& ts, const SolvedInstance& ex) {
  if (ex.descriptions.empty() || ex.descriptions.size() != ex.gold_roles.size()) {
    throw ValidationError("solved exemplar needs one gold role per description");
  }
  std::vector<std::string> answers;
  for (std::size_t i = 0; i < ex.gold_roles.size(); ++i) {
    answers.push_back(ts.render("llm_solved_answer",
                                {{"index", std::to_string(i + 1)}, {"role", ex.gold_roles[i]}}));
  }
  return ts.render("llm_solved_instance",
                   {{"caption", text::collapse_whitespace(ex.caption)},
                    {"event", ex.event_name},
                    {"role_block", ex.role_block},
                    {"object_descriptions", object_lines(ts, ex.descriptions)},
                    {"answers", text::join(answers, "\n")}});
}

}  // namespace

MultimodalPrompt render_gvlm_description_prompt(const Instance& instance, PromptMode mode,
                                                const std::string& role_block,
                                                const TemplateSet& ts) {
  MultimodalPrompt p;
  switch (mode) {
    case PromptMode::Full:
      p.images = {event_image(instance), object_crop(instance)};
      p.text = ts.render("gvlm_description_full",
                         {{"event", instance.event->name}, {"role_block", role_block}});
      break;
    case PromptMode::NoEventImage:
      p.images = {object_crop(instance)};
      p.text = ts.render("gvlm_description_no_event_image",
                         {{"event", instance.event->name}, {"role_block", role_block}});
      break;
    case PromptMode::ObjectCaptionOnly:
      p.images = {object_crop(instance)};
      p.text = ts.render("gvlm_object_caption", {});
      break;
  }
  return p;
}

MultimodalPrompt render_image_caption_prompt(const ImageRecord& image, const TemplateSet& ts) {
  MultimodalPrompt p;
  p.images = {{image.image_ref, std::nullopt}};
  p.text = ts.render("image_caption", {});
  return p;
}

TextPrompt render_llm_labeling_prompt(const std::string& caption, const EventType& event,
                                      const std::string& role_block,
                                      const std::vector<std::string>& descriptions,
                                      const std::vector<SolvedInstance>& exemplars,
                                      const TemplateSet& ts) {
  if (descriptions.empty()) {
    throw ValidationError("labeling prompt needs at least one object description");
  }
  const std::string query =
      ts.render("llm_query_instance", {{"caption", text::collapse_whitespace(caption)},
                                       {"event", event.name},
                                       {"role_block", role_block},
                                       {"object_descriptions", object_lines(ts, descriptions)},
                                       {"answer_stubs", answer_stubs(ts, descriptions.size())}});
  TextPrompt p;
  p.expected_object_count = descriptions.size();
  p.role_vocabulary = with_other(event.role_names());
  if (exemplars.empty()) {
    p.text = ts.render("llm_labeling_zero_shot", {{"query_block", query}});
    return p;
  }
  std::vector<std::string> blocks;
  for (const auto& ex : exemplars) blocks.push_back(solved_block(ts, ex));
  const std::string intro =
      exemplars.size() == 1
          ? ts.render("llm_exemplar_intro_single", {})
          : ts.render("llm_exemplar_intro_multi", {{"count", std::to_string(exemplars.size())}});
  p.text = ts.render("llm_labeling_few_shot", {{"exemplar_intro", intro},
                                               {"solved_blocks", text::join(blocks, "\n\n")},
                                               {"query_block", query}});
  return p;
}

TextPrompt render_alpaca_prompt(const std::string& caption, const EventType& event,
                                const std::string& role_block, const std::string& description,
                                const TemplateSet& ts) {
  const std::string desc = text::collapse_whitespace(description);
  if (desc.empty()) throw ValidationError("alpaca prompt needs a non-empty object description");
  TextPrompt p;
  p.text = ts.render("alpaca_labeling", {{"caption", text::collapse_whitespace(caption)},
                                         {"event", event.name},
                                         {"role_block", role_block},
                                         {"description", desc}});
  p.expected_object_count = 1;
  p.role_vocabulary = with_other(event.role_names());
  return p;
}

MultimodalPrompt render_gvlm_direct_earl_prompt(const Instance& instance,
                                                const std::string& role_block,
                                                const TemplateSet& ts) {
  MultimodalPrompt p;
  p.images = {event_image(instance), object_crop(instance)};
  p.text = ts.render("gvlm_direct_earl",
                     {{"event", instance.event->name},
                      {"role_block", role_block + "\n- " + std::string(kOtherLabel)}});
  p.answer_vocabulary = with_other(instance.candidate_roles);
  return p;
}

TextPrompt render_event_detection_prompt(const std::string& caption, const Ontology& ontology,
                                         const TemplateSet& ts) {
  if (ontology.events.empty()) {
    throw ValidationError("event detection prompt needs a non-empty ontology");
  }
  std::vector<std::string> lines;
  for (const auto& e : ontology.events) {
    const std::string def = text::collapse_whitespace(e.definition);
    lines.push_back(def.empty() ? "- " + e.name : "- " + e.name + ": " + def);
  }
  TextPrompt p;
  p.text = ts.render("event_detection", {{"caption", text::collapse_whitespace(caption)},
                                         {"event_list", text::join(lines, "\n")}});
  p.role_vocabulary = ontology.event_names();
  return p;
}

std::string render_similarity_template(const ArgumentRole& role, const EventType& event,
                                       const TemplateSet& ts) {
  return ts.render("similarity_role", {{"role", role.name}, {"event", event.name}});
}

std::string render_event_similarity_template(const EventType& event, const TemplateSet& ts) {
  return ts.render("similarity_event", {{"event", event.name}});
}

}  // namespace genearl
