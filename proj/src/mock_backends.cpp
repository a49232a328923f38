#include "genearl/mock_backends.hpp"

#include <fstream>
#include <random>
#include <regex>

#include "genearl/digest.hpp"
#include "genearl/error.hpp"
#include "genearl/json_io.hpp"
#include "genearl/text.hpp"

namespace genearl {

using nlohmann::json;

namespace {

Response response_from_script(const json& value) {
  Response r;
  if (value.is_string()) {
    r.text = value.get<std::string>();
  } else if (value.is_object()) {
    r.text = value.value("text", std::string{});
    if (value.contains("scores")) r.scores = value.at("scores").get<std::vector<double>>();
  } else {
    throw ConfigError("scripted response must be a string or an object");
  }
  return r;
}

}  // namespace

// --- ScriptedBackend ---------------------------------------------------------

ScriptedBackend::ScriptedBackend(BackendConfig config) : LocalBackend(std::move(config)) {
  const json& opts = this->config().options;
  if (opts.contains("script")) {
    load(json_io::read(opts.at("script").get<std::string>()));
  }
  load(opts);
}

void ScriptedBackend::load(const json& doc) {
  try {
    if (doc.contains("responses")) {
      for (const auto& [digest, value] : doc.at("responses").items()) {
        responses_[digest] = response_from_script(value);
      }
    }
    if (doc.contains("default")) default_ = response_from_script(doc.at("default"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad scripted backend options: ") + e.what());
  }
}

void ScriptedBackend::set(const std::string& digest, Response response) {
  std::lock_guard lock(mu_);
  responses_[digest] = std::move(response);
}

void ScriptedBackend::set_text(const std::string& digest, const std::string& text) {
  Response r;
  r.text = text;
  set(digest, std::move(r));
}

void ScriptedBackend::set_default(Response response) {
  std::lock_guard lock(mu_);
  default_ = std::move(response);
}

bool ScriptedBackend::supports(Operation op) const {
  return op == Operation::Generate || op == Operation::Chat || op == Operation::Score;
}

Response ScriptedBackend::respond(const Request& request) {
  const std::string digest = prompt_digest(request);
  std::lock_guard lock(mu_);
  auto it = responses_.find(digest);
  if (it != responses_.end()) return it->second;
  if (default_) return *default_;
  throw BackendError("no scripted response for prompt digest " + digest);
}

// --- OracleBackend -----------------------------------------------------------

OracleBackend::OracleBackend(BackendConfig config, const Dataset& gold,
                             const TemplateSet& templates)
    : LocalBackend(std::move(config)),
      templates_(templates),
      dimension_(this->config().options.value("dimension", std::size_t{16})) {
  if (dimension_ == 0) throw ConfigError("oracle embedding dimension must be positive");
  for (const auto& image : gold.images) {
    image_events_[image.id] = image.event_name;
    image_refs_.emplace(image.image_ref, image.id);
    for (const auto& obj : image.objects) {
      objects_.push_back({image.id, obj.id, image.event_name, obj.gold_role.value_or("")});
      boxes_.push_back(obj.bbox);
    }
  }
}

std::string OracleBackend::image_marker(const std::string& image_id) {
  return "oracle-image[" + image_id + "]";
}

std::string OracleBackend::object_marker(const std::string& image_id,
                                         const std::string& object_id) {
  return "oracle-ref[" + image_id + "|" + object_id + "]";
}

std::vector<double> OracleBackend::text_vector(const std::string& text) const {
  const std::string digest = sha256_hex(text);
  std::mt19937_64 rng(std::stoull(digest.substr(0, 16), nullptr, 16));
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(dimension_);
  for (auto& x : v) x = dist(rng);
  return v;
}

const OracleBackend::GoldObject* OracleBackend::find_region(const ImageSlot& slot) const {
  if (!slot.crop) return nullptr;
  auto ref = image_refs_.find(slot.image_ref);
  if (ref == image_refs_.end()) return nullptr;
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].image_id == ref->second && boxes_[i] == *slot.crop) return &objects_[i];
  }
  return nullptr;
}

const OracleBackend::GoldObject* OracleBackend::find_ref(const std::string& image_id,
                                                         const std::string& object_id) const {
  for (const auto& o : objects_) {
    if (o.image_id == image_id && o.object_id == object_id) return &o;
  }
  return nullptr;
}

std::string OracleBackend::role_for_description_line(const std::string& line) const {
  static const std::regex ref(R"(oracle-ref\[([^|\]]*)\|([^\]]*)\])");
  std::smatch m;
  if (!std::regex_search(line, m, ref)) return std::string(kOtherLabel);
  const GoldObject* o = find_ref(m[1].str(), m[2].str());
  if (!o || o->role.empty()) return std::string(kOtherLabel);
  return o->role;
}

Response OracleBackend::respond_generate(const Request& request) const {
  Response r;
  const ImageSlot& last = request.images.back();
  if (!request.vocabulary.empty()) {
    const GoldObject* o = find_region(last);
    r.text = o && !o->role.empty() ? o->role : std::string(kOtherLabel);
    return r;
  }
  if (!last.crop) {
    auto it = image_refs_.find(last.image_ref);
    if (it == image_refs_.end()) {
      r.text = "An image.";
    } else {
      r.text = "Oracle caption for " + image_marker(it->second) + ": a scene depicting the " +
               image_events_.at(it->second) + " event.";
    }
    return r;
  }
  const GoldObject* o = find_region(last);
  if (!o) {
    r.text = "An object.";
  } else if (o->role.empty()) {
    r.text = "The entity " + object_marker(o->image_id, o->object_id) + " takes part in the " +
             o->event + " event.";
  } else {
    r.text = "The entity " + object_marker(o->image_id, o->object_id) + " acts as the " +
             o->role + " in the " + o->event + " event.";
  }
  return r;
}

Response OracleBackend::respond_chat(const Request& request) const {
  Response r;
  std::string_view body = request.text;
  if (auto pos = body.rfind("Query Instance:"); pos != std::string_view::npos) {
    body = body.substr(pos);
  }
  if (request.expected_count == 0) {
    static const std::regex image(R"(oracle-image\[([^\]]*)\])");
    const std::string s(body);
    std::string event = "Unknown";
    for (auto it = std::sregex_iterator(s.begin(), s.end(), image); it != std::sregex_iterator();
         ++it) {
      auto e = image_events_.find((*it)[1].str());
      if (e != image_events_.end()) event = e->second;
    }
    r.text = event;
    return r;
  }
  static const std::regex line_re(R"(^Role of Object(?: (\d+))?:(.*)$)");
  std::map<std::size_t, std::string> roles;
  for (const auto& line : text::split_lines(body)) {
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    const std::size_t index = m[1].matched ? std::stoul(m[1].str()) : 1;
    roles[index] = role_for_description_line(m[2].str());
  }
  std::vector<std::string> answers;
  for (std::size_t i = 1; i <= request.expected_count; ++i) {
    auto it = roles.find(i);
    answers.push_back("Argument Role of Object " + std::to_string(i) + ": " +
                      (it == roles.end() ? std::string(kOtherLabel) : it->second));
  }
  r.text = text::join(answers, "\n");
  return r;
}

Response OracleBackend::respond_score(const Request& request) const {
  std::string role(kOtherLabel);
  if (!request.images.empty()) {
    const GoldObject* o = find_region(request.images.back());
    if (o && !o->role.empty()) role = o->role;
  } else {
    for (const auto& line : text::split_lines(request.text)) {
      if (line.rfind("Role of Object", 0) == 0) role = role_for_description_line(line);
    }
  }
  Response r;
  for (const auto& c : request.items) r.scores.push_back(text::iequals(c, role) ? 1.0 : 0.0);
  return r;
}

Response OracleBackend::respond_region(const Request& request) const {
  Response r;
  const std::string& key = request.region_key;
  for (const auto& o : objects_) {
    if (o.image_id + "/" + o.object_id != key) continue;
    if (o.role.empty()) throw MissingEmbeddingError(key);
    EventType event{o.event, "", {}};
    r.vectors.emplace_back(
        text_vector(render_similarity_template(ArgumentRole{o.role, ""}, event, templates_)));
    return r;
  }
  auto it = image_events_.find(key);
  if (it == image_events_.end()) throw MissingEmbeddingError(key);
  r.vectors.emplace_back(
      text_vector(render_event_similarity_template(EventType{it->second, "", {}}, templates_)));
  return r;
}

Response OracleBackend::respond(const Request& request) {
  switch (request.op) {
    case Operation::Generate: return respond_generate(request);
    case Operation::Chat: return respond_chat(request);
    case Operation::Score: return respond_score(request);
    case Operation::EmbedRegion: return respond_region(request);
    case Operation::EmbedText: {
      Response r;
      for (const auto& t : request.items) r.vectors.emplace_back(text_vector(t));
      return r;
    }
  }
  throw CapabilityError("oracle backend: unknown operation");
}

// --- ConstantBackend ---------------------------------------------------------

ConstantBackend::ConstantBackend(BackendConfig config) : LocalBackend(std::move(config)) {
  const json& opts = this->config().options;
  try {
    if (opts.contains("text")) text_ = opts.at("text").get<std::string>();
    if (opts.contains("scores")) scores_ = opts.at("scores").get<std::vector<double>>();
    if (opts.contains("vector")) vector_ = opts.at("vector").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad constant backend options: ") + e.what());
  }
}

bool ConstantBackend::supports(Operation op) const {
  switch (op) {
    case Operation::Generate:
    case Operation::Chat: return text_.has_value();
    case Operation::Score: return scores_.has_value();
    case Operation::EmbedText:
    case Operation::EmbedRegion: return vector_.has_value();
  }
  return false;
}

Response ConstantBackend::respond(const Request& request) {
  Response r;
  switch (request.op) {
    case Operation::Generate:
    case Operation::Chat:
      if (text_) r.text = *text_;
      break;
    case Operation::Score:
      if (scores_) r.scores = *scores_;
      break;
    case Operation::EmbedText:
      if (vector_) r.vectors.assign(request.items.size(), EmbeddingVector(*vector_));
      break;
    case Operation::EmbedRegion:
      if (vector_) r.vectors.emplace_back(*vector_);
      break;
  }
  return r;
}

// --- FailingBackend ----------------------------------------------------------

FailingBackend::FailingBackend(BackendConfig config) : LocalBackend(std::move(config)) {
  const json& opts = this->config().options;
  fail_times_ = opts.value("fail_times", -1LL);
  transient_ = opts.value("transient", true);
  message_ = opts.value("message", std::string("simulated backend failure"));
  BackendConfig then = this->config();
  then.options = opts.value("then", json::object());
  then_ = std::make_unique<ConstantBackend>(std::move(then));
}

bool FailingBackend::supports(Operation op) const {
  return fail_times_ < 0 || then_->supports(op);
}

Response FailingBackend::respond(const Request& request) {
  if (fail_times_ < 0 || failures_.fetch_add(1) < fail_times_) {
    throw BackendError(message_, transient_);
  }
  return then_->dispatch(request);
}

// --- SidecarEmbeddingBackend -------------------------------------------------

SidecarEmbeddingBackend::SidecarEmbeddingBackend(BackendConfig config)
    : LocalBackend(std::move(config)) {
  const json& opts = this->config().options;
  if (!opts.contains("path") || !opts.at("path").is_string()) {
    throw ConfigError("embedding-sidecar backend needs options.path");
  }
  load(opts.at("path").get<std::string>());
}

SidecarEmbeddingBackend::SidecarEmbeddingBackend(BackendConfig config,
                                                 const std::filesystem::path& path)
    : LocalBackend(std::move(config)) {
  load(path);
}

void SidecarEmbeddingBackend::load(const std::filesystem::path& path) {
  const auto records = json_io::read_lines(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string ctx = path.string() + ":record " + std::to_string(i + 1);
    const json& rec = records[i];
    const std::string scope = json_io::require_string(rec, "scope", ctx);
    const std::string key = json_io::require_string(rec, "key", ctx);
    EmbeddingVector v;
    try {
      v = EmbeddingVector(json_io::require_array(rec, "vector", ctx).get<std::vector<double>>());
    } catch (const ContractError& e) {
      throw ValidationError(ctx + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError(ctx + ".vector", e.what());
    }
    if (scope == "object") {
      objects_.insert_or_assign(key, std::move(v));
    } else if (scope == "text") {
      texts_.insert_or_assign(key, std::move(v));
    } else if (scope == "image") {
      images_.insert_or_assign(key, std::move(v));
    } else {
      throw ParseError(ctx + ".scope", "expected object, text or image, got '" + scope + "'");
    }
  }
}

bool SidecarEmbeddingBackend::supports(Operation op) const {
  return op == Operation::EmbedText || op == Operation::EmbedRegion;
}

Response SidecarEmbeddingBackend::respond(const Request& request) {
  Response r;
  if (request.op == Operation::EmbedText) {
    for (const auto& t : request.items) {
      auto it = texts_.find(t);
      if (it == texts_.end()) throw MissingEmbeddingError(t);
      r.vectors.push_back(it->second);
    }
    return r;
  }
  const bool whole_image = request.images.empty() || !request.images.front().crop;
  const auto& table = whole_image ? images_ : objects_;
  auto it = table.find(request.region_key);
  if (it == table.end()) throw MissingEmbeddingError(request.region_key);
  r.vectors.push_back(it->second);
  return r;
}

void write_sidecar(const std::filesystem::path& path, const std::vector<SidecarRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += json{{"scope", rec.scope}, {"key", rec.key}, {"vector", rec.vector}}.dump();
    out += '\n';
  }
  json_io::write_atomic(path, out);
}

}  // namespace genearl
