#include "toolprune/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "toolprune/hash.hpp"
#include "toolprune/prompts.hpp"
#include "toolprune/pruners.hpp"

namespace toolprune {

using nlohmann::ordered_json;

Source source_from_name(const std::string& name) {
  if (name == "swe") return Source::kSwe;
  if (name == "synthetic_pos") return Source::kSyntheticPos;
  if (name == "synthetic_neg") return Source::kSyntheticNeg;
  throw ParseError("unknown source: " + name);
}

std::string source_name(Source s) {
  switch (s) {
    case Source::kSwe: return "swe";
    case Source::kSyntheticPos: return "synthetic_pos";
    case Source::kSyntheticNeg: return "synthetic_neg";
  }
  throw ParseError("unknown source");
}

namespace {

constexpr const char* kSchemaFields[] = {"id",    "source",      "tool",       "repo",
                                         "query", "tool_output", "gold_spans", "split"};

bool is_schema_field(const std::string& key) {
  return std::find(std::begin(kSchemaFields), std::end(kSchemaFields), key) !=
         std::end(kSchemaFields);
}

std::string require_string(const ordered_json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field ") + key);
  if (!j.at(key).is_string()) throw ParseError(std::string("field ") + key + " must be a string");
  return j.at(key).get<std::string>();
}

std::string optional_string(const ordered_json& j, const char* key) {
  if (!j.contains(key)) return "";
  if (j.at(key).is_null()) return "";
  if (!j.at(key).is_string()) throw ParseError(std::string("field ") + key + " must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace

DatasetExample example_from_json(const ordered_json& j) {
  if (!j.is_object()) throw ParseError("row is not a JSON object");
  DatasetExample ex;
  ex.id = require_string(j, "id");
  if (ex.id.empty()) throw ParseError("field id must be nonempty");
  ex.source = source_from_name(require_string(j, "source"));
  ex.tool = require_string(j, "tool");
  if (ex.tool.empty()) throw ParseError("field tool must be nonempty");
  ex.repo = optional_string(j, "repo");
  ex.query = Query::make(require_string(j, "query")).text;
  ex.tool_output = require_string(j, "tool_output");
  ex.split = optional_string(j, "split");
  if (!ex.split.empty() && ex.split != "train" && ex.split != "dev" && ex.split != "test") {
    throw ParseError("field split must be train, dev, or test");
  }

  if (!j.contains("gold_spans") || !j.at("gold_spans").is_array()) {
    throw ParseError("field gold_spans must be an array of [start, end] pairs");
  }
  std::vector<Span> spans;
  for (const auto& pair : j.at("gold_spans")) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer()) {
      throw ParseError("gold_spans entries must be [start, end] integer pairs");
    }
    long long s = pair[0].get<long long>();
    long long e = pair[1].get<long long>();
    if (s < 1 || e < 1 || s > 0xFFFFFFFFLL || e > 0xFFFFFFFFLL) {
      throw ParseError("gold span indices must be positive 1-based line numbers");
    }
    spans.push_back(Span{static_cast<LineIndex>(s), static_cast<LineIndex>(e)});
  }
  ToolObservation obs = ToolObservation::from_text(ex.tool_output);
  ex.gold_spans = SpanSet::normalize(std::move(spans), obs.line_count());
  if (ex.source == Source::kSyntheticNeg && !ex.gold_spans.empty()) {
    throw ParseError("synthetic_neg example has nonempty gold_spans");
  }

  for (const auto& [key, value] : j.items()) {
    if (!is_schema_field(key)) ex.extras[key] = value;
  }
  return ex;
}

ordered_json example_to_json(const DatasetExample& ex) {
  ordered_json j;
  j["id"] = ex.id;
  j["source"] = source_name(ex.source);
  j["tool"] = ex.tool;
  if (!ex.repo.empty()) j["repo"] = ex.repo;
  j["query"] = ex.query;
  j["tool_output"] = ex.tool_output;
  ordered_json spans = ordered_json::array();
  for (const Span& s : ex.gold_spans.spans()) {
    spans.push_back(ordered_json::array({s.start, s.end}));
  }
  j["gold_spans"] = spans;
  if (!ex.split.empty()) j["split"] = ex.split;
  for (const auto& [key, value] : ex.extras.items()) j[key] = value;
  return j;
}

Dataset load_dataset(std::istream& in, const std::string& origin) {
  Dataset ds;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fail = [&](const std::string& reason) -> ParseError {
      std::ostringstream msg;
      msg << origin << ":" << line_no << ": " << reason;
      return ParseError(msg.str());
    };
    if (line.empty()) throw fail("empty line");
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) throw fail("malformed JSON");
    try {
      DatasetExample ex = example_from_json(j);
      if (!ids.insert(ex.id).second) throw ParseError("duplicate id " + ex.id);
      ds.push_back(std::move(ex));
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  return ds;
}

Dataset load_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_dataset(in, path.string());
}

void save_dataset(std::ostream& out, const Dataset& ds) {
  for (const DatasetExample& ex : ds) out << example_to_json(ex).dump() << '\n';
}

void save_dataset_file(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_dataset(out, ds);
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

std::string split_group_key(const DatasetExample& ex) {
  if (ex.source == Source::kSwe) {
    if (ex.repo.empty()) throw InvalidArgument("swe example " + ex.id + " has no repo");
    return "repo\x1f" + ex.repo;
  }
  return "tool\x1f" + ex.tool;
}

std::string assign_split(const std::string& group_key, const SplitConfig& cfg) {
  if (!(cfg.train > 0.0) || !(cfg.dev > 0.0) || !(cfg.test > 0.0)) {
    throw InvalidArgument("split ratios must be positive");
  }
  if (std::abs(cfg.train + cfg.dev + cfg.test - 1.0) > 1e-9) {
    throw InvalidArgument("split ratios must sum to 1");
  }
  // Mixed top 53 bits give a uniform double in [0, 1). Group keys share long
  // prefixes, so the raw FNV value must be finalized before bits are taken.
  std::uint64_t h = mix64(fnv1a64(cfg.seed + "\x1f" + group_key));
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  if (u < cfg.train) return "train";
  if (u < cfg.train + cfg.dev) return "dev";
  return "test";
}

void assign_splits(Dataset& ds, const SplitConfig& cfg) {
  for (DatasetExample& ex : ds) ex.split = assign_split(split_group_key(ex), cfg);
}

std::string curation_verdict_name(CurationVerdict v) {
  switch (v) {
    case CurationVerdict::kKept: return "kept";
    case CurationVerdict::kInvalidSpans: return "invalid_spans";
    case CurationVerdict::kTrivialOutput: return "trivial_output";
    case CurationVerdict::kOverlyBroad: return "overly_broad";
    case CurationVerdict::kNearDuplicate: return "near_duplicate";
    case CurationVerdict::kReviewQueue: return "review_queue";
  }
  throw InvalidArgument("unknown curation verdict");
}

namespace {

std::unordered_set<std::uint64_t> shingle_set(std::string_view text) {
  std::unordered_set<std::uint64_t> out;
  if (text.size() < 8) return out;
  for (std::size_t i = 0; i + 8 <= text.size(); ++i) {
    out.insert(fnv1a64(text.substr(i, 8)));
  }
  return out;
}

double jaccard(const std::unordered_set<std::uint64_t>& a,
               const std::unordered_set<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  std::size_t inter = 0;
  for (std::uint64_t h : small) inter += large.count(h);
  return static_cast<double>(inter) /
         static_cast<double>(a.size() + b.size() - inter);
}

bool shares_token(const std::string& a, const std::string& b) {
  std::vector<std::string> ta = tokenize(a);
  std::unordered_set<std::string> set(ta.begin(), ta.end());
  for (const std::string& t : tokenize(b)) {
    if (set.count(t)) return true;
  }
  return false;
}

}  // namespace

double shingle_jaccard(std::string_view a, std::string_view b) {
  return jaccard(shingle_set(a), shingle_set(b));
}

CurationReport curate(const Dataset& ds, const CurationThresholds& thresholds) {
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ds[a].id < ds[b].id; });

  CurationReport report;
  struct KeptEntry {
    std::string id;
    std::unordered_set<std::uint64_t> shingles;
  };
  std::vector<KeptEntry> kept_pool;

  for (std::size_t idx : order) {
    const DatasetExample& ex = ds[idx];
    CurationResult result;
    result.id = ex.id;

    ToolObservation obs;
    bool valid = true;
    try {
      obs = ToolObservation::from_text(ex.tool_output);
      SpanSet::normalize(ex.gold_spans.spans(), obs.line_count());
    } catch (const Error& e) {
      valid = false;
      result.verdict = CurationVerdict::kInvalidSpans;
      result.detail = e.what();
    }

    if (valid) {
      std::size_t gold_lines = ex.gold_spans.covered_count();
      if (obs.line_count() <= thresholds.trivial_max_lines) {
        result.verdict = CurationVerdict::kTrivialOutput;
        result.detail = std::to_string(obs.line_count()) + " lines";
      } else if (static_cast<double>(gold_lines) >
                 thresholds.overly_broad_fraction * obs.line_count()) {
        result.verdict = CurationVerdict::kOverlyBroad;
        result.detail = std::to_string(gold_lines) + " of " +
                        std::to_string(obs.line_count()) + " lines covered";
      } else {
        auto shingles = shingle_set(ex.query + "\n" + ex.tool_output);
        for (const KeptEntry& kept : kept_pool) {
          if (jaccard(shingles, kept.shingles) > thresholds.near_duplicate_jaccard) {
            result.verdict = CurationVerdict::kNearDuplicate;
            result.duplicate_of_id = kept.id;
            result.detail = "near duplicate of " + kept.id;
            break;
          }
        }
        if (result.verdict == CurationVerdict::kKept) {
          bool unsupported_query = !ex.gold_spans.empty() &&
                                   obs.line_count() > thresholds.review_min_lines &&
                                   !shares_token(ex.query, extract_span_text(obs, ex.gold_spans));
          if (unsupported_query) {
            result.verdict = CurationVerdict::kReviewQueue;
            result.detail = "gold text shares no token with the query";
          } else {
            kept_pool.push_back({ex.id, std::move(shingles)});
            report.kept.push_back(ex);
          }
        }
      }
    }

    if (result.verdict == CurationVerdict::kReviewQueue) report.review_queue.push_back(ex);
    ++report.counts[curation_verdict_name(result.verdict)];
    report.results.push_back(std::move(result));
  }
  return report;
}

ordered_json curation_report_to_json(const CurationReport& report) {
  ordered_json j;
  j["counts"] = ordered_json::object();
  for (const auto& [name, count] : report.counts) j["counts"][name] = count;
  j["results"] = ordered_json::array();
  for (const CurationResult& r : report.results) {
    ordered_json row;
    row["id"] = r.id;
    row["verdict"] = curation_verdict_name(r.verdict);
    if (!r.detail.empty()) row["detail"] = r.detail;
    if (!r.duplicate_of_id.empty()) row["duplicate_of"] = r.duplicate_of_id;
    j["results"].push_back(std::move(row));
  }
  return j;
}

Dataset generate_negatives(const Dataset& positives, const NegativeConfig& cfg) {
  Dataset pool;
  for (const DatasetExample& ex : positives) {
    if (!ex.gold_spans.empty()) pool.push_back(ex);
  }
  if (pool.size() < 2) {
    throw InvalidArgument("negative mining needs at least 2 positive examples");
  }

  std::mt19937_64 rng(cfg.seed);
  std::set<std::pair<std::size_t, std::size_t>> used;
  Dataset out;
  for (std::size_t k = 0; k < cfg.count; ++k) {
    bool found = false;
    for (std::size_t draw = 0; draw < cfg.max_draws_per_negative && !found; ++draw) {
      std::size_t i = static_cast<std::size_t>(bounded_rand(rng, pool.size()));
      std::size_t j = static_cast<std::size_t>(bounded_rand(rng, pool.size()));
      if (i == j || !used.insert({i, j}).second) continue;
      const DatasetExample& qi = pool[i];
      const DatasetExample& oj = pool[j];
      bool mismatched = qi.tool != oj.tool;
      if (!mismatched) {
        ToolObservation obs = ToolObservation::from_text(oj.tool_output);
        std::vector<double> scores = bm25_line_scores(obs, Query{qi.query});
        mismatched = *std::max_element(scores.begin(), scores.end()) == 0.0;
      }
      if (!mismatched) continue;

      DatasetExample neg;
      neg.id = "neg-" + sha256_hex(qi.id + "\x1f" + oj.id).substr(0, 16);
      neg.source = Source::kSyntheticNeg;
      neg.tool = oj.tool;
      neg.query = qi.query;
      neg.tool_output = oj.tool_output;
      neg.extras["negative_query_from"] = qi.id;
      neg.extras["negative_output_from"] = oj.id;
      out.push_back(std::move(neg));
      found = true;
    }
    if (!found) break;  // callers compare out.size() against cfg.count
  }
  return out;
}

DatasetStats dataset_stats(const Dataset& ds) {
  if (ds.empty()) throw InvalidArgument("cannot compute stats of an empty dataset");
  DatasetStats stats;
  stats.total = ds.size();
  double input_tokens = 0.0;
  double gold_tokens = 0.0;
  for (const DatasetExample& ex : ds) {
    ++stats.by_source[source_name(ex.source)];
    ++stats.by_tool[ex.tool];
    if (!ex.split.empty()) ++stats.by_split[ex.split];
    if (ex.gold_spans.empty()) ++stats.negatives;
    ToolObservation obs = ToolObservation::from_text(ex.tool_output);
    input_tokens += static_cast<double>(whitespace_token_count(obs.raw_text()));
    gold_tokens +=
        static_cast<double>(whitespace_token_count(extract_span_text(obs, ex.gold_spans)));
  }
  stats.mean_input_tokens = input_tokens / static_cast<double>(ds.size());
  stats.mean_gold_tokens = gold_tokens / static_cast<double>(ds.size());
  return stats;
}

ordered_json stats_to_json(const DatasetStats& stats) {
  ordered_json j;
  j["total"] = stats.total;
  j["negatives"] = stats.negatives;
  j["mean_input_tokens"] = stats.mean_input_tokens;
  j["mean_gold_tokens"] = stats.mean_gold_tokens;
  j["by_source"] = ordered_json::object();
  for (const auto& [k, v] : stats.by_source) j["by_source"][k] = v;
  j["by_tool"] = ordered_json::object();
  for (const auto& [k, v] : stats.by_tool) j["by_tool"][k] = v;
  j["by_split"] = ordered_json::object();
  for (const auto& [k, v] : stats.by_split) j["by_split"][k] = v;
  return j;
}

std::string stats_table_text(const DatasetStats& stats) {
  std::vector<std::pair<std::string, std::string>> rows;
  char buf[64];
  rows.emplace_back("total", std::to_string(stats.total));
  rows.emplace_back("negatives", std::to_string(stats.negatives));
  std::snprintf(buf, sizeof(buf), "%.1f", stats.mean_input_tokens);
  rows.emplace_back("mean_input_tokens", buf);
  std::snprintf(buf, sizeof(buf), "%.1f", stats.mean_gold_tokens);
  rows.emplace_back("mean_gold_tokens", buf);

  auto add_group = [&rows](const std::string& prefix,
                           const std::map<std::string, std::size_t>& counts) {
    // Largest groups first; name breaks ties so output is stable.
    std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (const auto& [name, count] : sorted) {
      rows.emplace_back(prefix + "/" + name, std::to_string(count));
    }
  };
  add_group("source", stats.by_source);
  add_group("tool", stats.by_tool);
  add_group("split", stats.by_split);

  std::size_t label_width = 0;
  std::size_t value_width = 0;
  for (const auto& [label, value] : rows) {
    label_width = std::max(label_width, label.size());
    value_width = std::max(value_width, value.size());
  }
  std::string out;
  for (const auto& [label, value] : rows) {
    out += label;
    out.append(label_width - label.size() + 2, ' ');
    out.append(value_width - value.size(), ' ');
    out += value;
    out.push_back('\n');
  }
  return out;
}

std::vector<SftRecord> export_sft(const Dataset& ds) {
  std::vector<SftRecord> records;
  records.reserve(ds.size());
  for (const DatasetExample& ex : ds) {
    ToolObservation obs = ToolObservation::from_text(ex.tool_output);
    records.push_back({build_prune_prompt(obs, Query{ex.query}),
                       linearize_target(obs, ex.gold_spans)});
  }
  return records;
}

void save_sft_file(const std::filesystem::path& path, const std::vector<SftRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const SftRecord& r : records) {
    ordered_json j;
    j["prompt"] = r.prompt;
    j["completion"] = r.completion;
    out << j.dump() << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace toolprune
