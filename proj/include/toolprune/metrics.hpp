#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "toolprune/text.hpp"

namespace toolprune {

enum class MatchMode { kStrict, kTolerant };

struct MatchCounts {
  std::size_t matched_pred = 0;
  std::size_t matched_gold = 0;
};

// Many-to-many set matching over line text: a predicted line is matched when
// any gold line's text matches it, and vice versa. Strict mode requires byte
// equality after trailing-whitespace trim; tolerant mode requires fuzzy
// similarity > 0.5.
MatchCounts match_lines(const std::vector<std::string>& pred_texts,
                        const std::vector<std::string>& gold_texts, MatchMode mode);

// Per-example scores. precision/recall/f1 use tolerant matching (the
// headline numbers); strict_* require exact text equality. Invariants:
// f1 >= strict_f1 always, and exact_match implies strict_f1 == 1 on
// non-degenerate rows.
struct MetricsRow {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double strict_precision = 0.0;
  double strict_recall = 0.0;
  double strict_f1 = 0.0;
  bool exact_match = false;
  double compression = 0.0;
  bool is_negative = false;      // gold is empty
  bool empty_prediction = false;
  std::size_t predicted_lines = 0;  // aligned + unaligned
  std::size_t gold_lines = 0;
  std::size_t unaligned_lines = 0;
};

// Predicted lines are the aligned source lines plus any unaligned emitted
// lines; the latter match no gold text but count as predictions and as
// predicted token mass. exact_match requires the aligned index set to equal
// gold with nothing unaligned. compression = 1 - predicted tokens / input
// tokens, clamped to [0, 1], whitespace tokens. Degenerate negatives: empty
// prediction scores all ones; a nonempty prediction scores zero everywhere
// except compression.
MetricsRow score_example(const ToolObservation& obs, const Prediction& pred,
                         const SpanSet& gold);

// Unweighted arithmetic means over a group of rows.
struct MetricMeans {
  std::size_t count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double strict_precision = 0.0;
  double strict_recall = 0.0;
  double strict_f1 = 0.0;
  double exact_match = 0.0;
  double compression = 0.0;
  // Over negative rows only: fraction with an empty prediction. 0 when the
  // group has no negatives.
  double negative_empty_rate = 0.0;
  std::size_t negative_count = 0;
};

struct AggregateReport {
  std::string system;
  MetricMeans overall;
  std::map<std::string, MetricMeans> by_tool;
};

struct LabeledRow {
  std::string tool;
  MetricsRow row;
};

// Order-invariant: rows are summed in the order given, so callers wanting
// bit-reproducibility across parallel schedules must pass rows in a fixed
// (id-sorted) order. Empty input is an error.
AggregateReport aggregate(const std::vector<LabeledRow>& rows, const std::string& system);

struct TradeoffPoint {
  std::string system;
  double compression = 0.0;
  double recall = 0.0;
};

// One row per report, sorted by system label; duplicate labels are an error.
std::vector<TradeoffPoint> tradeoff_points(const std::vector<AggregateReport>& reports);

// CSV with header "system,compression,recall", 4 decimal places, final newline.
std::string tradeoff_csv(const std::vector<TradeoffPoint>& points);

double harmonic_f1(double precision, double recall);

}  // namespace toolprune
