#include "genearl/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "genearl/error.hpp"
#include "genearl/ontology.hpp"
#include "genearl/text.hpp"

namespace genearl {

Metrics metrics_from_counts(const Counts& c) {
  Metrics m;
  m.counts = c;
  const auto ratio = [](std::size_t n, std::size_t d) {
    return d == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d);
  };
  m.accuracy = ratio(c.correct, c.gold_total);
  m.recall = m.accuracy;
  m.precision = ratio(c.correct, c.predicted_non_other);
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

GoldView gold_view(const Dataset& dataset, const std::set<std::string>& excluded_images) {
  GoldView g;
  for (const auto& img : dataset.images) {
    if (excluded_images.count(img.id)) continue;
    g.events[img.id] = img.event_name;
    for (const auto& obj : img.objects) {
      if (obj.gold_role) g.roles[{img.id, obj.id}] = *obj.gold_role;
    }
  }
  return g;
}

namespace {

bool is_other(const std::string& role) { return text::iequals(text::trim(role), kOtherLabel); }

// Counts per gold event. `event_ok(image)` gates correctness.
template <class EventOk>
std::map<std::string, Counts> count_by_event(const PredictionSet& preds, const GoldView& gold,
                                             EventOk event_ok) {
  std::map<std::string, Counts> counts;
  for (const auto& [key, role] : gold.roles) counts[gold.events.at(key.first)].gold_total++;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : preds.predictions) {
    auto it = gold.roles.find({p.image_id, p.object_id});
    if (it == gold.roles.end()) {
      throw ValidationError("prediction for unknown object '" + p.object_id + "' of image '" +
                            p.image_id + "'");
    }
    if (!seen.emplace(p.image_id, p.object_id).second) {
      throw ValidationError("two predictions for object '" + p.object_id + "' of image '" +
                            p.image_id + "'");
    }
    if (is_other(p.predicted_role)) continue;
    Counts& c = counts[gold.events.at(p.image_id)];
    c.predicted_non_other++;
    if (event_ok(p.image_id) && text::iequals(text::trim(p.predicted_role), it->second)) {
      c.correct++;
    }
  }
  return counts;
}

MetricsReport report_from(const std::map<std::string, Counts>& by_event) {
  MetricsReport r;
  Counts total;
  for (const auto& [event, c] : by_event) {
    r.per_event[event] = metrics_from_counts(c);
    total += c;
  }
  r.overall = metrics_from_counts(total);
  return r;
}

}  // namespace

MetricsReport score_earl(const PredictionSet& predictions, const GoldView& gold) {
  return report_from(count_by_event(predictions, gold, [](const std::string&) { return true; }));
}

std::map<std::string, Metrics> per_event_breakdown(const PredictionSet& predictions,
                                                   const GoldView& gold) {
  return score_earl(predictions, gold).per_event;
}

EventDetectionReport score_event_detection(const std::vector<EventPrediction>& event_predictions,
                                           const GoldView& gold) {
  std::map<std::string, std::string> predicted;
  for (const auto& e : event_predictions) predicted.emplace(e.image_id, e.event);
  EventDetectionReport r;
  for (const auto& [image, event] : gold.events) {
    r.images++;
    auto it = predicted.find(image);
    if (it != predicted.end() && text::iequals(text::trim(it->second), event)) r.correct++;
  }
  r.accuracy = r.images == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.images);
  return r;
}

MetricsReport score_combined(const std::vector<EventPrediction>& event_predictions,
                             const PredictionSet& earl_predictions, const GoldView& gold) {
  std::map<std::string, std::string> predicted;
  for (const auto& e : event_predictions) predicted.emplace(e.image_id, e.event);
  return report_from(count_by_event(earl_predictions, gold, [&](const std::string& image) {
    auto it = predicted.find(image);
    return it != predicted.end() && text::iequals(text::trim(it->second), gold.events.at(image));
  }));
}

nlohmann::json to_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"gold_total", m.counts.gold_total},
          {"predicted_non_other", m.counts.predicted_non_other},
          {"correct", m.counts.correct}};
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_event = nlohmann::json::object();
  for (const auto& [event, m] : r.per_event) per_event[event] = to_json(m);
  return {{"overall", to_json(r.overall)}, {"per_event", per_event}};
}

nlohmann::json to_json(const EventDetectionReport& r) {
  return {{"images", r.images}, {"correct", r.correct}, {"accuracy", r.accuracy}};
}

std::string format_table(const MetricsReport& report, const std::string& title) {
  std::size_t width = std::string_view("Overall").size();
  for (const auto& [event, _] : report.per_event) width = std::max(width, event.size());
  std::ostringstream out;
  char buf[256];
  auto row = [&](const std::string& name, const Metrics& m) {
    std::snprintf(buf, sizeof buf, "%-*s  %6zu  %8.1f  %9.1f  %6.1f  %6.1f\n",
                  static_cast<int>(width), name.c_str(), m.counts.gold_total, 100 * m.accuracy,
                  100 * m.precision, 100 * m.recall, 100 * m.f1);
    out << buf;
  };
  out << title << '\n';
  std::snprintf(buf, sizeof buf, "%-*s  %6s  %8s  %9s  %6s  %6s\n", static_cast<int>(width),
                "Event", "Gold", "Acc(%)", "Prec(%)", "Rec(%)", "F1(%)");
  out << buf << std::string(width + 45, '-') << '\n';
  for (const auto& [event, m] : report.per_event) row(event, m);
  out << std::string(width + 45, '-') << '\n';
  row("Overall", report.overall);
  return out.str();
}

}  // namespace genearl
