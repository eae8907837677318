#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toolprune.h"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitEndpoint = 3;

int exit_code_for(tp_status status) {
  return status == TP_EENDPOINT ? kExitEndpoint : kExitUsage;
}

int complain(tp_status status) {
  std::cerr << "error: " << tp_last_error() << "\n";
  return exit_code_for(status);
}

// Takes ownership of a tp-allocated string.
std::string take_string(char* s) {
  std::string out = s ? s : "";
  tp_string_free(s);
  return out;
}

std::string read_all(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  out.flush();
  return static_cast<bool>(out);
}

struct EndpointFlags {
  std::string endpoint;
  std::string model;
  std::string api_key_env;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--endpoint", endpoint, "Chat-completion endpoint URL (llm method)");
    cmd->add_option("--model", model, "Model name sent to the endpoint");
    cmd->add_option("--api-key-env", api_key_env,
                    "Environment variable holding the API bearer token");
  }

  void add_to_options(ordered_json& j) const {
    if (!endpoint.empty()) j["endpoint"] = endpoint;
    if (!model.empty()) j["model"] = model;
    if (!api_key_env.empty()) j["api_key_env"] = api_key_env;
  }
};

int run_prune(const std::string& input_path, const std::string& query,
              const std::string& method, double keep_fraction, std::uint64_t seed,
              bool numbered, const std::string& gold, const EndpointFlags& endpoint) {
  std::string text;
  if (input_path.empty() || input_path == "-") {
    text = read_all(std::cin);
  } else {
    std::ifstream in(input_path, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot open " << input_path << "\n";
      return kExitUsage;
    }
    text = read_all(in);
  }

  tp_observation* obs = nullptr;
  tp_status status = tp_observation_create(text.c_str(), &obs);
  if (status != TP_OK) return complain(status);
  std::unique_ptr<tp_observation, decltype(&tp_observation_free)> obs_guard(
      obs, tp_observation_free);

  ordered_json options;
  options["method"] = method;
  options["keep_fraction"] = keep_fraction;
  options["seed"] = seed;
  endpoint.add_to_options(options);
  if (!gold.empty()) {
    ordered_json parsed = ordered_json::parse(gold, nullptr, false);
    if (parsed.is_discarded()) {
      std::cerr << "error: --gold must be a JSON array of [start, end] pairs\n";
      return kExitUsage;
    }
    options["gold"] = parsed;
  }

  tp_prediction* pred = nullptr;
  status = tp_prune(obs, query.c_str(), options.dump().c_str(), &pred);
  if (status != TP_OK) return complain(status);
  std::unique_ptr<tp_prediction, decltype(&tp_prediction_free)> pred_guard(
      pred, tp_prediction_free);

  char* out = nullptr;
  status = tp_prediction_extract(obs, pred, numbered ? 1 : 0, &out);
  if (status != TP_OK) return complain(status);
  std::string pruned = take_string(out);
  if (!pruned.empty()) std::cout << pruned << "\n";
  return kExitOk;
}

int run_eval(const std::string& dataset, const std::string& split, const std::string& method,
             double keep_fraction, std::uint64_t seed, unsigned workers,
             const std::string& system, const std::string& out_path,
             const std::string& per_example_path, const EndpointFlags& endpoint) {
  ordered_json options;
  options["command"] = "eval";
  options["method"] = method;
  options["keep_fraction"] = keep_fraction;
  options["seed"] = seed;
  options["workers"] = workers;
  if (!split.empty()) options["split"] = split;
  if (!system.empty()) options["system"] = system;
  endpoint.add_to_options(options);

  char* report = nullptr;
  char* per_example = nullptr;
  tp_status status = tp_eval_file(dataset.c_str(), options.dump().c_str(), &report,
                                  per_example_path.empty() ? nullptr : &per_example);
  if (status != TP_OK) return complain(status);
  std::string report_text = take_string(report);
  std::string per_example_text = take_string(per_example);

  if (out_path.empty()) {
    std::cout << report_text;
  } else if (!write_file(out_path, report_text)) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return kExitUsage;
  }
  if (!per_example_path.empty() && !write_file(per_example_path, per_example_text)) {
    std::cerr << "error: cannot write " << per_example_path << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int run_report(const std::vector<std::string>& report_paths, const std::string& out_path) {
  std::vector<std::string> bodies;
  std::vector<const char*> pointers;
  for (const std::string& path : report_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot open " << path << "\n";
      return kExitUsage;
    }
    bodies.push_back(read_all(in));
  }
  for (const std::string& body : bodies) pointers.push_back(body.c_str());

  char* csv = nullptr;
  tp_status status = tp_tradeoff_csv(pointers.data(), pointers.size(), &csv);
  if (status != TP_OK) return complain(status);
  std::string text = take_string(csv);
  if (out_path.empty()) {
    std::cout << text;
  } else if (!write_file(out_path, text)) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-conditioned pruning of coding-agent tool output"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tp_version()));

  // prune
  auto* prune = app.add_subcommand("prune", "Prune piped tool output against a query");
  std::string prune_query;
  std::string prune_method = "bm25";
  double prune_keep = 0.1;
  std::uint64_t prune_seed = 0;
  bool prune_numbered = false;
  std::string prune_input;
  std::string prune_gold;
  EndpointFlags prune_endpoint;
  prune->add_option("--query", prune_query, "Extraction query")->required();
  prune->add_option("--method", prune_method,
                    "Pruning method: first, last, random, bm25, llm, oracle");
  prune->add_option("--keep-fraction", prune_keep, "Fraction of lines to keep (0, 1]");
  prune->add_option("--seed", prune_seed, "Seed for the random method");
  prune->add_flag("--numbered", prune_numbered, "Prefix output lines with \"n: \"");
  prune->add_option("--input", prune_input, "Read this file instead of stdin");
  prune->add_option("--gold", prune_gold,
                    "Gold spans as JSON [start, end] pairs (oracle method)");
  prune_endpoint.add_to(prune);

  // eval
  auto* eval = app.add_subcommand("eval", "Score a benchmark dataset with one system");
  std::string eval_dataset;
  std::string eval_split;
  std::string eval_method = "bm25";
  double eval_keep = 0.1;
  std::uint64_t eval_seed = 0;
  unsigned eval_workers = 1;
  std::string eval_system;
  std::string eval_out;
  std::string eval_per_example;
  EndpointFlags eval_endpoint;
  eval->add_option("--dataset", eval_dataset, "Benchmark JSONL file")->required();
  eval->add_option("--split", eval_split, "Evaluate only this split (train, dev, test)");
  eval->add_option("--method", eval_method,
                   "Pruning method: first, last, random, bm25, llm, oracle");
  eval->add_option("--keep-fraction", eval_keep, "Fraction of lines to keep (0, 1]");
  eval->add_option("--seed", eval_seed, "Seed for the random method");
  eval->add_option("--workers", eval_workers, "Scoring threads");
  eval->add_option("--system", eval_system, "Report label (defaults to the method)");
  eval->add_option("--out", eval_out, "Write the report JSON here instead of stdout");
  eval->add_option("--per-example-out", eval_per_example, "Write per-example JSONL here");
  eval_endpoint.add_to(eval);

  // report
  auto* report = app.add_subcommand("report", "Build the trade-off CSV from eval reports");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report->add_option("reports", report_inputs, "Eval report JSON files")
      ->required()
      ->expected(-1);
  report->add_option("--out", report_out, "Write the CSV here instead of stdout");

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Benchmark dataset lifecycle");
  dataset->require_subcommand(1);

  auto* ds_validate = dataset->add_subcommand("validate", "Strictly load a JSONL file");
  std::string val_in;
  ds_validate->add_option("input", val_in, "Benchmark JSONL file")->required();

  auto* ds_split = dataset->add_subcommand("split", "Assign group-atomic splits");
  std::string split_in;
  std::string split_out;
  double split_train = 0.925;
  double split_dev = 0.021;
  double split_test = 0.054;
  std::string split_seed = "split-v1";
  ds_split->add_option("input", split_in, "Benchmark JSONL file")->required();
  ds_split->add_option("--out", split_out, "Output JSONL path")->required();
  ds_split->add_option("--train", split_train, "Train ratio");
  ds_split->add_option("--dev", split_dev, "Dev ratio");
  ds_split->add_option("--test", split_test, "Test ratio");
  ds_split->add_option("--seed", split_seed, "Split hash seed string");

  auto* ds_curate = dataset->add_subcommand("curate", "Filter and queue examples");
  std::string curate_in;
  std::string curate_out;
  std::string curate_review;
  std::string curate_report;
  ds_curate->add_option("input", curate_in, "Benchmark JSONL file")->required();
  ds_curate->add_option("--out", curate_out, "Kept examples JSONL path")->required();
  ds_curate->add_option("--review-out", curate_review, "Review queue JSONL path");
  ds_curate->add_option("--report-out", curate_report, "Curation report JSON path");

  auto* ds_neg = dataset->add_subcommand("negatives", "Mine mismatched-pair negatives");
  std::string neg_in;
  std::string neg_out;
  std::uint64_t neg_count = 0;
  std::uint64_t neg_seed = 0;
  ds_neg->add_option("input", neg_in, "Positive examples JSONL file")->required();
  ds_neg->add_option("--out", neg_out, "Output JSONL path")->required();
  ds_neg->add_option("--count", neg_count, "Number of negatives to mine")->required();
  ds_neg->add_option("--seed", neg_seed, "Draw seed");

  auto* ds_stats = dataset->add_subcommand("stats", "Describe a dataset");
  std::string stats_in;
  bool stats_json = false;
  ds_stats->add_option("input", stats_in, "Benchmark JSONL file")->required();
  ds_stats->add_flag("--json", stats_json, "Print JSON instead of the text table");

  auto* ds_sft = dataset->add_subcommand("export-sft", "Export prompt/completion JSONL");
  std::string sft_in;
  std::string sft_out;
  ds_sft->add_option("input", sft_in, "Benchmark JSONL file")->required();
  ds_sft->add_option("--out", sft_out, "Output JSONL path")->required();

  auto* ds_label = dataset->add_subcommand("label", "Teacher-label raw observations");
  std::string label_in;
  std::string label_out;
  std::string label_skips;
  std::uint64_t label_attempts = 3;
  EndpointFlags label_endpoint;
  ds_label->add_option("input", label_in,
                       "Raw observations JSONL ({tool, background, raw_text})")
      ->required();
  ds_label->add_option("--out", label_out, "Labeled examples JSONL path")->required();
  ds_label->add_option("--skips-out", label_skips, "Skip report JSON path");
  ds_label->add_option("--attempts", label_attempts, "Max attempts per teacher stage");
  label_endpoint.add_to(ds_label);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (prune->parsed()) {
    return run_prune(prune_input, prune_query, prune_method, prune_keep, prune_seed,
                     prune_numbered, prune_gold, prune_endpoint);
  }
  if (eval->parsed()) {
    return run_eval(eval_dataset, eval_split, eval_method, eval_keep, eval_seed,
                    eval_workers, eval_system, eval_out, eval_per_example, eval_endpoint);
  }
  if (report->parsed()) {
    return run_report(report_inputs, report_out);
  }

  if (ds_validate->parsed()) {
    uint64_t count = 0;
    tp_status status = tp_dataset_validate(val_in.c_str(), &count);
    if (status != TP_OK) return complain(status);
    std::cout << val_in << ": " << count << " examples, all valid\n";
    return kExitOk;
  }
  if (ds_split->parsed()) {
    ordered_json options;
    options["train"] = split_train;
    options["dev"] = split_dev;
    options["test"] = split_test;
    options["seed"] = split_seed;
    tp_status status =
        tp_dataset_split(split_in.c_str(), split_out.c_str(), options.dump().c_str());
    if (status != TP_OK) return complain(status);
    return kExitOk;
  }
  if (ds_curate->parsed()) {
    char* report_json = nullptr;
    tp_status status =
        tp_dataset_curate(curate_in.c_str(), curate_out.c_str(),
                          curate_review.empty() ? nullptr : curate_review.c_str(),
                          &report_json);
    if (status != TP_OK) return complain(status);
    std::string report_text = take_string(report_json);
    if (curate_report.empty()) {
      std::cout << report_text;
    } else if (!write_file(curate_report, report_text)) {
      std::cerr << "error: cannot write " << curate_report << "\n";
      return kExitUsage;
    }
    return kExitOk;
  }
  if (ds_neg->parsed()) {
    ordered_json options;
    options["count"] = neg_count;
    options["seed"] = neg_seed;
    tp_status status =
        tp_dataset_negatives(neg_in.c_str(), neg_out.c_str(), options.dump().c_str());
    if (status != TP_OK) return complain(status);
    return kExitOk;
  }
  if (ds_stats->parsed()) {
    char* stats = nullptr;
    tp_status status = tp_dataset_stats(stats_in.c_str(), &stats);
    if (status != TP_OK) return complain(status);
    std::string text = take_string(stats);
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (stats_json) {
      j.erase("table");
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << j["table"].get<std::string>();
    }
    return kExitOk;
  }
  if (ds_sft->parsed()) {
    tp_status status = tp_dataset_export_sft(sft_in.c_str(), sft_out.c_str());
    if (status != TP_OK) return complain(status);
    return kExitOk;
  }
  if (ds_label->parsed()) {
    ordered_json options;
    options["max_attempts_per_stage"] = label_attempts;
    label_endpoint.add_to_options(options);
    char* skips = nullptr;
    tp_status status = tp_dataset_label(label_in.c_str(), label_out.c_str(),
                                        options.dump().c_str(), &skips);
    if (status != TP_OK) return complain(status);
    std::string text = take_string(skips);
    if (label_skips.empty()) {
      std::cout << text;
    } else if (!write_file(label_skips, text)) {
      std::cerr << "error: cannot write " << label_skips << "\n";
      return kExitUsage;
    }
    return kExitOk;
  }

  return kExitUsage;
}
