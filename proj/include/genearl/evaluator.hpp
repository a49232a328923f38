#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genearl/dataset.hpp"
#include "genearl/pipeline.hpp"

namespace genearl {

// How abstentions are scored; printed in every report.
inline constexpr std::string_view kScoringConvention =
    "micro-averaged exact match (case-insensitive); Other and missing predictions abstain: "
    "precision = correct / non-Other predictions, recall = accuracy = correct / gold objects, "
    "precision is 0 when nothing was predicted";

struct Counts {
  std::size_t gold_total = 0;
  std::size_t predicted_non_other = 0;
  std::size_t correct = 0;

  Counts& operator+=(const Counts& o) {
    gold_total += o.gold_total;
    predicted_non_other += o.predicted_non_other;
    correct += o.correct;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct Metrics {
  Counts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Metrics metrics_from_counts(const Counts& counts);

struct MetricsReport {
  Metrics overall;
  std::map<std::string, Metrics> per_event;
};

// Gold annotations of the evaluated images.
struct GoldView {
  std::map<std::pair<std::string, std::string>, std::string> roles;  // (image, object) -> role
  std::map<std::string, std::string> events;                         // image -> event
  // Objects whose gold role was filtered away are not part of the view.
};

// Gold of every image in `dataset` except `excluded_images`.
GoldView gold_view(const Dataset& dataset, const std::set<std::string>& excluded_images = {});

// Throws ValidationError for a prediction of an object absent from `gold`.
MetricsReport score_earl(const PredictionSet& predictions, const GoldView& gold);
std::map<std::string, Metrics> per_event_breakdown(const PredictionSet& predictions,
                                                   const GoldView& gold);

struct EventDetectionReport {
  std::size_t images = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

// Exact (case-insensitive) match per gold image; "Unknown" and missing
// predictions count wrong; predictions for images outside `gold` are ignored.
EventDetectionReport score_event_detection(const std::vector<EventPrediction>& event_predictions,
                                           const GoldView& gold);

// A role counts as correct only when its image's predicted event is also correct.
MetricsReport score_combined(const std::vector<EventPrediction>& event_predictions,
                             const PredictionSet& earl_predictions, const GoldView& gold);

nlohmann::json to_json(const Metrics& metrics);
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const EventDetectionReport& report);

// Aligned-column table: one row per event, then the overall row.
std::string format_table(const MetricsReport& report, const std::string& title);

}  // namespace genearl
