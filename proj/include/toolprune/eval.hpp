#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolprune/dataset.hpp"
#include "toolprune/metrics.hpp"
#include "toolprune/pruners.hpp"

namespace toolprune {

struct EvalOptions {
  Method method = Method::kBm25;
  double keep_fraction = 0.1;
  std::uint64_t seed = 0;
  std::string system;            // defaults to method name
  unsigned workers = 1;          // scoring threads
  std::string split;             // empty: whole dataset
  // LLM method only.
  ChatClient* client = nullptr;
  std::string model;
};

struct PerExampleResult {
  std::string id;
  std::string tool;
  MetricsRow row;
  LineSet predicted;
  bool failed = false;   // endpoint gave up; scored as an empty prediction
  std::string error;
};

struct EvalRun {
  std::string system;
  AggregateReport report;
  std::vector<PerExampleResult> per_example;  // id order
  std::size_t failed_count = 0;
};

// Scores every example of the selected split with the chosen method.
// Examples are id-sorted up front, scored by a worker pool into slots indexed
// by position, then reduced in id order, so the result is identical for any
// worker count. Endpoint failures mark the example failed instead of
// aborting the run.
EvalRun run_eval(const Dataset& ds, const EvalOptions& opt);

// Provenance embedded in every eval report; identical manifests imply
// bit-identical heuristic results.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json resolved_config = nlohmann::ordered_json::object();
  std::string dataset_path;
  std::string dataset_sha256;
  std::string system;
  std::uint64_t seed = 0;
  std::string timestamp;  // RFC 3339 UTC
  std::string version;
};

RunManifest make_manifest(const std::string& command, const EvalOptions& opt,
                          const std::string& dataset_path);

nlohmann::ordered_json manifest_to_json(const RunManifest& m);
nlohmann::ordered_json means_to_json(const MetricMeans& m);
nlohmann::ordered_json report_to_json(const EvalRun& run, const RunManifest& manifest);

// One compact JSON object per example, id order, newline-terminated.
std::string per_example_jsonl(const EvalRun& run);

// Current time as RFC 3339 UTC; SOURCE_DATE_EPOCH overrides the clock so
// archived runs can be reproduced byte for byte.
std::string rfc3339_utc_now();

}  // namespace toolprune
