#include "toolprune/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "toolprune/error.hpp"
#include "toolprune/fuzzy.hpp"

namespace toolprune {

namespace {

std::string_view trim_trailing(std::string_view s) {
  std::size_t end = s.size();
  while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(0, end);
}

bool matches(const std::string& a, const std::string& b, MatchMode mode) {
  if (mode == MatchMode::kStrict) return trim_trailing(a) == trim_trailing(b);
  return fuzzy_similarity(a, b) > kFuzzyThreshold;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

MatchCounts match_lines(const std::vector<std::string>& pred_texts,
                        const std::vector<std::string>& gold_texts, MatchMode mode) {
  MatchCounts out;
  for (const std::string& p : pred_texts) {
    if (std::any_of(gold_texts.begin(), gold_texts.end(),
                    [&](const std::string& g) { return matches(p, g, mode); })) {
      ++out.matched_pred;
    }
  }
  for (const std::string& g : gold_texts) {
    if (std::any_of(pred_texts.begin(), pred_texts.end(),
                    [&](const std::string& p) { return matches(p, g, mode); })) {
      ++out.matched_gold;
    }
  }
  return out;
}

double harmonic_f1(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

MetricsRow score_example(const ToolObservation& obs, const Prediction& pred,
                         const SpanSet& gold) {
  LineSet gold_set = gold.to_lineset();
  for (LineIndex n : gold_set) obs.line(n);  // range-checks gold

  MetricsRow row;
  row.is_negative = gold_set.empty();
  row.empty_prediction = pred.empty();
  row.predicted_lines = pred.indices.size() + pred.unaligned_lines.size();
  row.gold_lines = gold_set.size();
  row.unaligned_lines = pred.unaligned_lines.size();

  std::size_t input_tokens = whitespace_token_count(obs.raw_text());
  std::size_t pred_tokens = whitespace_token_count(predicted_text(pred, obs));
  if (input_tokens == 0) {
    row.compression = pred_tokens == 0 ? 1.0 : 0.0;
  } else {
    row.compression = clamp01(1.0 - static_cast<double>(pred_tokens) /
                                        static_cast<double>(input_tokens));
  }

  row.exact_match = pred.indices == gold_set && pred.unaligned_lines.empty();

  if (gold_set.empty()) {
    if (pred.empty()) {
      row.precision = row.recall = row.f1 = 1.0;
      row.strict_precision = row.strict_recall = row.strict_f1 = 1.0;
    }
    return row;
  }

  std::vector<std::string> pred_texts;
  pred_texts.reserve(row.predicted_lines);
  for (LineIndex n : pred.indices) pred_texts.push_back(obs.line(n));
  for (const std::string& line : pred.unaligned_lines) pred_texts.push_back(line);
  std::vector<std::string> gold_texts;
  gold_texts.reserve(gold_set.size());
  for (LineIndex n : gold_set) gold_texts.push_back(obs.line(n));

  const double p_total = static_cast<double>(pred_texts.size());
  const double g_total = static_cast<double>(gold_texts.size());

  MatchCounts tolerant = match_lines(pred_texts, gold_texts, MatchMode::kTolerant);
  row.precision = pred_texts.empty() ? 0.0 : tolerant.matched_pred / p_total;
  row.recall = tolerant.matched_gold / g_total;
  row.f1 = harmonic_f1(row.precision, row.recall);

  MatchCounts strict = match_lines(pred_texts, gold_texts, MatchMode::kStrict);
  row.strict_precision = pred_texts.empty() ? 0.0 : strict.matched_pred / p_total;
  row.strict_recall = strict.matched_gold / g_total;
  row.strict_f1 = harmonic_f1(row.strict_precision, row.strict_recall);
  return row;
}

namespace {

struct MeanAccumulator {
  MetricMeans sums;
  std::size_t negatives_empty = 0;

  void add(const MetricsRow& row) {
    ++sums.count;
    sums.precision += row.precision;
    sums.recall += row.recall;
    sums.f1 += row.f1;
    sums.strict_precision += row.strict_precision;
    sums.strict_recall += row.strict_recall;
    sums.strict_f1 += row.strict_f1;
    sums.exact_match += row.exact_match ? 1.0 : 0.0;
    sums.compression += row.compression;
    if (row.is_negative) {
      ++sums.negative_count;
      if (row.empty_prediction) ++negatives_empty;
    }
  }

  MetricMeans finish() const {
    MetricMeans m = sums;
    double n = static_cast<double>(m.count);
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    m.strict_precision /= n;
    m.strict_recall /= n;
    m.strict_f1 /= n;
    m.exact_match /= n;
    m.compression /= n;
    m.negative_empty_rate =
        m.negative_count == 0
            ? 0.0
            : static_cast<double>(negatives_empty) / static_cast<double>(m.negative_count);
    return m;
  }
};

}  // namespace

AggregateReport aggregate(const std::vector<LabeledRow>& rows, const std::string& system) {
  if (rows.empty()) throw InvalidArgument("cannot aggregate zero rows");
  MeanAccumulator overall;
  std::map<std::string, MeanAccumulator> by_tool;
  for (const LabeledRow& lr : rows) {
    overall.add(lr.row);
    by_tool[lr.tool].add(lr.row);
  }
  AggregateReport report;
  report.system = system;
  report.overall = overall.finish();
  for (const auto& [tool, acc] : by_tool) report.by_tool[tool] = acc.finish();
  return report;
}

std::vector<TradeoffPoint> tradeoff_points(const std::vector<AggregateReport>& reports) {
  if (reports.empty()) throw InvalidArgument("no reports given");
  std::vector<TradeoffPoint> points;
  points.reserve(reports.size());
  for (const AggregateReport& r : reports) {
    points.push_back({r.system, r.overall.compression, r.overall.recall});
  }
  std::sort(points.begin(), points.end(),
            [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.system < b.system; });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].system == points[i - 1].system) {
      throw InvalidArgument("duplicate system label: " + points[i].system);
    }
  }
  return points;
}

std::string tradeoff_csv(const std::vector<TradeoffPoint>& points) {
  std::string out = "system,compression,recall\n";
  char buf[64];
  for (const TradeoffPoint& p : points) {
    std::snprintf(buf, sizeof(buf), ",%.4f,%.4f\n", p.compression, p.recall);
    out += p.system;
    out += buf;
  }
  return out;
}

}  // namespace toolprune
