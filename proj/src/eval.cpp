#include "toolprune/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <thread>

#include "toolprune/chat_client.hpp"
#include "toolprune/error.hpp"
#include "toolprune/hash.hpp"
#include "toolprune/prompts.hpp"
#include "toolprune/version.hpp"

namespace toolprune {

using nlohmann::ordered_json;

EvalRun run_eval(const Dataset& ds, const EvalOptions& opt) {
  if (opt.workers < 1) throw InvalidArgument("workers must be >= 1");

  std::vector<const DatasetExample*> selected;
  for (const DatasetExample& ex : ds) {
    if (opt.split.empty() || ex.split == opt.split) selected.push_back(&ex);
  }
  if (selected.empty()) {
    throw InvalidArgument(opt.split.empty() ? "dataset is empty"
                                            : "no examples in split " + opt.split);
  }
  std::sort(selected.begin(), selected.end(),
            [](const DatasetExample* a, const DatasetExample* b) { return a->id < b->id; });

  EvalRun run;
  run.system = opt.system.empty() ? system_label(opt.method) : opt.system;
  run.per_example.resize(selected.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t slot = next.fetch_add(1);
      if (slot >= selected.size()) return;
      const DatasetExample& ex = *selected[slot];
      PerExampleResult& res = run.per_example[slot];
      res.id = ex.id;
      res.tool = ex.tool;
      try {
        ToolObservation obs = ex.observation();
        try {
          PruneConfig cfg;
          cfg.method = opt.method;
          cfg.keep_fraction = opt.keep_fraction;
          cfg.seed = opt.seed;
          cfg.client = opt.client;
          cfg.model = opt.model;
          cfg.gold = &ex.gold_spans;
          cfg.example_id = ex.id;
          Prediction pred = prune(obs, Query{ex.query}, cfg);
          res.predicted = pred.indices;
          res.row = score_example(obs, pred, ex.gold_spans);
        } catch (const EndpointError& e) {
          res.failed = true;
          res.error = e.what();
          res.row = score_example(obs, Prediction{}, ex.gold_spans);
        }
      } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
      }
    }
  };

  std::size_t pool =
      std::min<std::size_t>(opt.workers, selected.size());
  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (std::size_t i = 0; i < pool; ++i) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  std::vector<LabeledRow> rows;
  rows.reserve(run.per_example.size());
  for (const PerExampleResult& res : run.per_example) {
    rows.push_back({res.tool, res.row});
    if (res.failed) ++run.failed_count;
  }
  run.report = aggregate(rows, run.system);
  return run;
}

std::string rfc3339_utc_now() {
  std::time_t now;
  const char* pinned = std::getenv("SOURCE_DATE_EPOCH");
  if (pinned && *pinned) {
    now = static_cast<std::time_t>(std::strtoll(pinned, nullptr, 10));
  } else {
    now = std::time(nullptr);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest make_manifest(const std::string& command, const EvalOptions& opt,
                          const std::string& dataset_path) {
  RunManifest m;
  m.command = command;
  // The worker count is deliberately absent: results are schedule-independent,
  // so runs differing only in parallelism must produce identical bytes.
  m.resolved_config["method"] = method_name(opt.method);
  m.resolved_config["keep_fraction"] = opt.keep_fraction;
  m.resolved_config["seed"] = opt.seed;
  m.resolved_config["split"] = opt.split;
  if (opt.method == Method::kLlm) {
    m.resolved_config["model"] = opt.model;
    m.resolved_config["prompt_version"] = kPromptVersion;
  }
  m.dataset_path = dataset_path;
  if (!dataset_path.empty()) m.dataset_sha256 = sha256_file_hex(dataset_path);
  m.system = opt.system.empty() ? system_label(opt.method) : opt.system;
  m.seed = opt.seed;
  m.timestamp = rfc3339_utc_now();
  m.version = kVersion;
  return m;
}

ordered_json manifest_to_json(const RunManifest& m) {
  ordered_json j;
  j["command"] = m.command;
  j["config"] = m.resolved_config;
  j["dataset_path"] = m.dataset_path;
  j["dataset_sha256"] = m.dataset_sha256;
  j["system"] = m.system;
  j["seed"] = m.seed;
  j["timestamp"] = m.timestamp;
  j["version"] = m.version;
  return j;
}

ordered_json means_to_json(const MetricMeans& m) {
  ordered_json j;
  j["count"] = m.count;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["strict_precision"] = m.strict_precision;
  j["strict_recall"] = m.strict_recall;
  j["strict_f1"] = m.strict_f1;
  j["exact_match"] = m.exact_match;
  j["compression"] = m.compression;
  j["negative_empty_rate"] = m.negative_empty_rate;
  j["negative_count"] = m.negative_count;
  return j;
}

ordered_json report_to_json(const EvalRun& run, const RunManifest& manifest) {
  ordered_json j;
  j["manifest"] = manifest_to_json(manifest);
  j["system"] = run.system;
  j["failed"] = run.failed_count;
  j["overall"] = means_to_json(run.report.overall);
  j["by_tool"] = ordered_json::object();
  for (const auto& [tool, means] : run.report.by_tool) {
    j["by_tool"][tool] = means_to_json(means);
  }
  return j;
}

std::string per_example_jsonl(const EvalRun& run) {
  std::string out;
  for (const PerExampleResult& res : run.per_example) {
    ordered_json j;
    j["id"] = res.id;
    j["tool"] = res.tool;
    j["precision"] = res.row.precision;
    j["recall"] = res.row.recall;
    j["f1"] = res.row.f1;
    j["strict_precision"] = res.row.strict_precision;
    j["strict_recall"] = res.row.strict_recall;
    j["strict_f1"] = res.row.strict_f1;
    j["exact_match"] = res.row.exact_match;
    j["compression"] = res.row.compression;
    j["is_negative"] = res.row.is_negative;
    j["empty_prediction"] = res.row.empty_prediction;
    j["predicted_lines"] = res.row.predicted_lines;
    j["gold_lines"] = res.row.gold_lines;
    j["unaligned_lines"] = res.row.unaligned_lines;
    j["predicted"] = res.predicted;
    if (res.failed) {
      j["failed"] = true;
      j["error"] = res.error;
    }
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace toolprune
