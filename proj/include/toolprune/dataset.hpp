#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolprune/text.hpp"

namespace toolprune {

enum class Source { kSwe, kSyntheticPos, kSyntheticNeg };

Source source_from_name(const std::string& name);
std::string source_name(Source s);

// One benchmark record. gold_spans is held normalized against tool_output;
// fields beyond the schema round-trip unchanged through extras.
struct DatasetExample {
  std::string id;
  Source source = Source::kSwe;
  std::string tool;
  std::string repo;   // empty when absent
  std::string query;
  std::string tool_output;
  SpanSet gold_spans;
  std::string split;  // empty until assigned
  nlohmann::ordered_json extras = nlohmann::ordered_json::object();

  ToolObservation observation() const { return ToolObservation::from_text(tool_output); }
};

using Dataset = std::vector<DatasetExample>;

// JSONL serialization. Loading is strict: malformed JSON, missing or
// mistyped required fields, out-of-range spans, and duplicate ids all throw
// ParseError naming the 1-based line. Saving emits one compact JSON object
// per line with schema fields first, then extras in original order.
DatasetExample example_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json example_to_json(const DatasetExample& ex);

Dataset load_dataset(std::istream& in, const std::string& origin);
Dataset load_dataset_file(const std::filesystem::path& path);
void save_dataset(std::ostream& out, const Dataset& ds);
void save_dataset_file(const std::filesystem::path& path, const Dataset& ds);

// Split assignment. Atomic by group key: repo for swe examples, tool for
// synthetic, so near-identical observations never straddle a split boundary.
// The key hashes with the seed to a uniform in [0, 1) tested against
// cumulative ratios; ratios must be positive and sum to 1.
struct SplitConfig {
  double train = 0.925;
  double dev = 0.021;
  double test = 0.054;
  std::string seed = "split-v1";
};

std::string split_group_key(const DatasetExample& ex);
std::string assign_split(const std::string& group_key, const SplitConfig& cfg);
void assign_splits(Dataset& ds, const SplitConfig& cfg);

// Curation. Each example receives exactly one verdict, first rule wins:
//   invalid_spans   gold spans malformed or out of range
//   trivial_output  observation has <= trivial_max_lines lines
//   overly_broad    gold covers more than overly_broad_fraction of lines
//   near_duplicate  char 8-shingle Jaccard of query + "\n" + tool_output
//                   above near_duplicate_jaccard against an earlier kept
//                   example (id order)
//   review_queue    nonempty gold sharing no token with the query on an
//                   observation longer than review_min_lines (a possible
//                   incorrect annotation; judging it is a human task)
//   kept
enum class CurationVerdict {
  kKept,
  kInvalidSpans,
  kTrivialOutput,
  kOverlyBroad,
  kNearDuplicate,
  kReviewQueue,
};

std::string curation_verdict_name(CurationVerdict v);

struct CurationThresholds {
  std::size_t trivial_max_lines = 2;
  double overly_broad_fraction = 0.6;
  double near_duplicate_jaccard = 0.9;
  std::size_t review_min_lines = 20;
};

struct CurationResult {
  std::string id;
  CurationVerdict verdict = CurationVerdict::kKept;
  std::string detail;           // human-readable reason
  std::string duplicate_of_id;  // near_duplicate only
};

struct CurationReport {
  std::vector<CurationResult> results;  // id order, one per input example
  Dataset kept;
  Dataset review_queue;
  std::map<std::string, std::size_t> counts;  // verdict name -> count
};

CurationReport curate(const Dataset& ds, const CurationThresholds& thresholds = {});
nlohmann::ordered_json curation_report_to_json(const CurationReport& report);

// Character 8-shingle Jaccard similarity; both-empty shingle sets count as 1.
double shingle_jaccard(std::string_view a, std::string_view b);

// Negative mining: pairs a query with a foreign observation such that either
// the tools differ or no query token scores under BM25, yielding an example
// whose correct answer is the empty span set. Deterministic under seed;
// returns fewer than `count` when the draw budget runs out.
struct NegativeConfig {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::size_t max_draws_per_negative = 64;
};

Dataset generate_negatives(const Dataset& positives, const NegativeConfig& cfg);

// Aggregate description of a dataset.
struct DatasetStats {
  std::size_t total = 0;
  std::map<std::string, std::size_t> by_source;
  std::map<std::string, std::size_t> by_tool;
  std::map<std::string, std::size_t> by_split;
  std::size_t negatives = 0;  // examples with empty gold
  double mean_input_tokens = 0.0;  // whitespace tokens of tool_output
  double mean_gold_tokens = 0.0;   // whitespace tokens of extracted gold text
};

DatasetStats dataset_stats(const Dataset& ds);
nlohmann::ordered_json stats_to_json(const DatasetStats& stats);
// Aligned plain-text rendering of the same numbers.
std::string stats_table_text(const DatasetStats& stats);

// Supervised fine-tuning export: prompt is the pruning prompt, completion is
// the linearized gold target.
struct SftRecord {
  std::string prompt;
  std::string completion;
};

std::vector<SftRecord> export_sft(const Dataset& ds);
void save_sft_file(const std::filesystem::path& path, const std::vector<SftRecord>& records);

}  // namespace toolprune
