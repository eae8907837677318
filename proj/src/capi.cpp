#include "toolprune.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolprune/chat_client.hpp"
#include "toolprune/dataset.hpp"
#include "toolprune/error.hpp"
#include "toolprune/eval.hpp"
#include "toolprune/fuzzy.hpp"
#include "toolprune/metrics.hpp"
#include "toolprune/pruners.hpp"
#include "toolprune/teacher.hpp"
#include "toolprune/text.hpp"
#include "toolprune/version.hpp"

using nlohmann::ordered_json;

struct tp_observation {
  toolprune::ToolObservation value;
};

struct tp_spanset {
  toolprune::SpanSet value;
};

struct tp_prediction {
  toolprune::Prediction value;
};

namespace {

thread_local std::string g_last_error;

tp_status fail(tp_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename F>
tp_status guarded(F&& f) {
  try {
    return f();
  } catch (const toolprune::InvalidArgument& e) {
    return fail(TP_EINVAL, e.what());
  } catch (const toolprune::ParseError& e) {
    return fail(TP_EPARSE, e.what());
  } catch (const toolprune::IoError& e) {
    return fail(TP_EIO, e.what());
  } catch (const toolprune::EndpointError& e) {
    return fail(TP_EENDPOINT, e.what());
  } catch (const std::exception& e) {
    return fail(TP_EINTERNAL, e.what());
  } catch (...) {
    return fail(TP_EINTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tp_status set_out_string(const std::string& s, char** out) {
  if (!out) return TP_OK;
  *out = dup_string(s);
  if (!*out) return fail(TP_EINTERNAL, "out of memory");
  return TP_OK;
}

ordered_json parse_options(const char* options_json,
                           std::initializer_list<const char*> allowed) {
  ordered_json j =
      ordered_json::parse(options_json && *options_json ? options_json : "{}", nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw toolprune::InvalidArgument("options must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) {
        known = true;
        break;
      }
    }
    if (!known) throw toolprune::InvalidArgument("unknown option key: " + key);
  }
  return j;
}

std::string option_string(const ordered_json& j, const char* key,
                          const std::string& fallback = "") {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) {
    throw toolprune::InvalidArgument(std::string("option ") + key + " must be a string");
  }
  return j.at(key).get<std::string>();
}

double option_number(const ordered_json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) {
    throw toolprune::InvalidArgument(std::string("option ") + key + " must be a number");
  }
  return j.at(key).get<double>();
}

std::uint64_t option_uint(const ordered_json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 0) {
    throw toolprune::InvalidArgument(std::string("option ") + key +
                                     " must be a nonnegative integer");
  }
  return j.at(key).get<std::uint64_t>();
}

std::string resolve_api_key(const ordered_json& j) {
  std::string env = option_string(j, "api_key_env");
  if (env.empty()) return "";
  const char* value = std::getenv(env.c_str());
  if (!value) {
    throw toolprune::InvalidArgument("environment variable " + env + " is not set");
  }
  return value;
}

std::unique_ptr<toolprune::HttpChatClient> make_http_client(const ordered_json& j) {
  toolprune::HttpChatOptions options;
  options.endpoint = option_string(j, "endpoint");
  if (options.endpoint.empty()) {
    throw toolprune::InvalidArgument("llm method requires an endpoint");
  }
  options.api_key = resolve_api_key(j);
  return std::make_unique<toolprune::HttpChatClient>(std::move(options));
}

toolprune::SpanSet spanset_from_pairs(const uint32_t* pairs, size_t n_spans,
                                      uint32_t line_count) {
  std::vector<toolprune::Span> spans;
  spans.reserve(n_spans);
  for (size_t i = 0; i < n_spans; ++i) {
    spans.push_back(toolprune::Span{pairs[2 * i], pairs[2 * i + 1]});
  }
  return toolprune::SpanSet::normalize(std::move(spans), line_count);
}

}  // namespace

extern "C" {

const char* tp_version(void) { return toolprune::kVersion; }

const char* tp_last_error(void) { return g_last_error.c_str(); }

void tp_string_free(char* s) { std::free(s); }

tp_status tp_observation_create(const char* raw_text, tp_observation** out) {
  return guarded([&]() -> tp_status {
    if (!raw_text || !out) return fail(TP_EINVAL, "null argument");
    auto handle = std::make_unique<tp_observation>();
    handle->value = toolprune::ToolObservation::from_text(raw_text);
    *out = handle.release();
    return TP_OK;
  });
}

void tp_observation_free(tp_observation* obs) { delete obs; }

uint32_t tp_observation_line_count(const tp_observation* obs) {
  return obs ? obs->value.line_count() : 0;
}

tp_status tp_observation_line(const tp_observation* obs, uint32_t index, const char** out) {
  return guarded([&]() -> tp_status {
    if (!obs || !out) return fail(TP_EINVAL, "null argument");
    *out = obs->value.line(index).c_str();
    return TP_OK;
  });
}

tp_status tp_observation_render_numbered(const tp_observation* obs, char** out) {
  return guarded([&]() -> tp_status {
    if (!obs || !out) return fail(TP_EINVAL, "null argument");
    return set_out_string(toolprune::render_numbered(obs->value), out);
  });
}

tp_status tp_spanset_create(const uint32_t* pairs, size_t n_spans, uint32_t line_count,
                            tp_spanset** out) {
  return guarded([&]() -> tp_status {
    if (!out || (n_spans > 0 && !pairs)) return fail(TP_EINVAL, "null argument");
    auto handle = std::make_unique<tp_spanset>();
    handle->value = spanset_from_pairs(pairs, n_spans, line_count);
    *out = handle.release();
    return TP_OK;
  });
}

void tp_spanset_free(tp_spanset* ss) { delete ss; }

size_t tp_spanset_size(const tp_spanset* ss) { return ss ? ss->value.size() : 0; }

tp_status tp_spanset_get(const tp_spanset* ss, size_t i, uint32_t* start, uint32_t* end) {
  return guarded([&]() -> tp_status {
    if (!ss || !start || !end) return fail(TP_EINVAL, "null argument");
    if (i >= ss->value.size()) return fail(TP_EINVAL, "span index out of range");
    *start = ss->value.spans()[i].start;
    *end = ss->value.spans()[i].end;
    return TP_OK;
  });
}

tp_status tp_spanset_extract(const tp_observation* obs, const tp_spanset* ss, char** out) {
  return guarded([&]() -> tp_status {
    if (!obs || !ss || !out) return fail(TP_EINVAL, "null argument");
    return set_out_string(toolprune::extract_span_text(obs->value, ss->value), out);
  });
}

tp_status tp_spanset_linearize(const tp_observation* obs, const tp_spanset* ss, char** out) {
  return guarded([&]() -> tp_status {
    if (!obs || !ss || !out) return fail(TP_EINVAL, "null argument");
    return set_out_string(toolprune::linearize_target(obs->value, ss->value), out);
  });
}

tp_status tp_parse_model_output(const tp_observation* obs, const char* emitted,
                                tp_prediction** out) {
  return guarded([&]() -> tp_status {
    if (!obs || !emitted || !out) return fail(TP_EINVAL, "null argument");
    auto handle = std::make_unique<tp_prediction>();
    handle->value = toolprune::parse_model_output(emitted, obs->value);
    *out = handle.release();
    return TP_OK;
  });
}

void tp_prediction_free(tp_prediction* pred) { delete pred; }

size_t tp_prediction_index_count(const tp_prediction* pred) {
  return pred ? pred->value.indices.size() : 0;
}

tp_status tp_prediction_indices(const tp_prediction* pred, uint32_t* buf) {
  return guarded([&]() -> tp_status {
    if (!pred || !buf) return fail(TP_EINVAL, "null argument");
    for (size_t i = 0; i < pred->value.indices.size(); ++i) buf[i] = pred->value.indices[i];
    return TP_OK;
  });
}

size_t tp_prediction_unaligned_count(const tp_prediction* pred) {
  return pred ? pred->value.unaligned_lines.size() : 0;
}

tp_status tp_prediction_unaligned_line(const tp_prediction* pred, size_t i, const char** out) {
  return guarded([&]() -> tp_status {
    if (!pred || !out) return fail(TP_EINVAL, "null argument");
    if (i >= pred->value.unaligned_lines.size()) {
      return fail(TP_EINVAL, "unaligned line index out of range");
    }
    *out = pred->value.unaligned_lines[i].c_str();
    return TP_OK;
  });
}

tp_status tp_prediction_extract(const tp_observation* obs, const tp_prediction* pred,
                                int numbered, char** out) {
  return guarded([&]() -> tp_status {
    if (!obs || !pred || !out) return fail(TP_EINVAL, "null argument");
    std::string text;
    bool first = true;
    for (toolprune::LineIndex n : pred->value.indices) {
      if (!first) text.push_back('\n');
      if (numbered) {
        text += std::to_string(n);
        text += ": ";
      }
      text += obs->value.line(n);
      first = false;
    }
    return set_out_string(text, out);
  });
}

tp_status tp_prune(const tp_observation* obs, const char* query, const char* options_json,
                   tp_prediction** out) {
  return guarded([&]() -> tp_status {
    if (!obs || !query || !out) return fail(TP_EINVAL, "null argument");
    ordered_json j = parse_options(options_json, {"method", "keep_fraction", "seed",
                                                  "example_id", "gold", "endpoint", "model",
                                                  "api_key_env"});
    toolprune::PruneConfig cfg;
    cfg.method = toolprune::method_from_name(option_string(j, "method", "bm25"));
    cfg.keep_fraction = option_number(j, "keep_fraction", 0.1);
    cfg.seed = option_uint(j, "seed", 0);
    cfg.example_id = option_string(j, "example_id");
    cfg.model = option_string(j, "model");

    toolprune::SpanSet gold;
    if (j.contains("gold")) {
      if (!j.at("gold").is_array()) {
        throw toolprune::InvalidArgument("option gold must be an array of [start, end] pairs");
      }
      std::vector<toolprune::Span> spans;
      for (const auto& pair : j.at("gold")) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
            !pair[1].is_number_integer()) {
          throw toolprune::InvalidArgument("option gold must be an array of [start, end] pairs");
        }
        spans.push_back(toolprune::Span{pair[0].get<uint32_t>(), pair[1].get<uint32_t>()});
      }
      gold = toolprune::SpanSet::normalize(std::move(spans), obs->value.line_count());
      cfg.gold = &gold;
    }

    std::unique_ptr<toolprune::HttpChatClient> client;
    if (cfg.method == toolprune::Method::kLlm) {
      client = make_http_client(j);
      cfg.client = client.get();
    }

    auto handle = std::make_unique<tp_prediction>();
    handle->value = toolprune::prune(obs->value, toolprune::Query::make(query), cfg);
    *out = handle.release();
    return TP_OK;
  });
}

double tp_fuzzy_similarity(const char* a, const char* b) {
  if (!a || !b) return 0.0;
  return toolprune::fuzzy_similarity(a, b);
}

tp_status tp_score_example(const tp_observation* obs, const tp_prediction* pred,
                           const tp_spanset* gold, tp_metrics_row* out) {
  return guarded([&]() -> tp_status {
    if (!obs || !pred || !gold || !out) return fail(TP_EINVAL, "null argument");
    toolprune::MetricsRow row =
        toolprune::score_example(obs->value, pred->value, gold->value);
    out->precision = row.precision;
    out->recall = row.recall;
    out->f1 = row.f1;
    out->strict_precision = row.strict_precision;
    out->strict_recall = row.strict_recall;
    out->strict_f1 = row.strict_f1;
    out->compression = row.compression;
    out->exact_match = row.exact_match ? 1 : 0;
    out->is_negative = row.is_negative ? 1 : 0;
    out->empty_prediction = row.empty_prediction ? 1 : 0;
    out->predicted_lines = row.predicted_lines;
    out->gold_lines = row.gold_lines;
    out->unaligned_lines = row.unaligned_lines;
    return TP_OK;
  });
}

tp_status tp_eval_file(const char* dataset_path, const char* options_json,
                       char** report_json, char** per_example_jsonl) {
  return guarded([&]() -> tp_status {
    if (!dataset_path) return fail(TP_EINVAL, "null dataset path");
    ordered_json j = parse_options(options_json, {"method", "keep_fraction", "seed", "split",
                                                  "workers", "system", "endpoint", "model",
                                                  "api_key_env", "command"});
    toolprune::EvalOptions opt;
    opt.method = toolprune::method_from_name(option_string(j, "method", "bm25"));
    opt.keep_fraction = option_number(j, "keep_fraction", 0.1);
    opt.seed = option_uint(j, "seed", 0);
    opt.split = option_string(j, "split");
    opt.workers = static_cast<unsigned>(option_uint(j, "workers", 1));
    opt.system = option_string(j, "system");
    opt.model = option_string(j, "model");

    std::unique_ptr<toolprune::HttpChatClient> client;
    if (opt.method == toolprune::Method::kLlm) {
      client = make_http_client(j);
      opt.client = client.get();
    }

    toolprune::Dataset ds = toolprune::load_dataset_file(dataset_path);
    toolprune::EvalRun run = toolprune::run_eval(ds, opt);
    toolprune::RunManifest manifest = toolprune::make_manifest(
        option_string(j, "command", "eval"), opt, dataset_path);
    if (opt.method == toolprune::Method::kLlm) {
      manifest.resolved_config["endpoint"] = option_string(j, "endpoint");
    }

    tp_status status =
        set_out_string(toolprune::report_to_json(run, manifest).dump(2) + "\n", report_json);
    if (status != TP_OK) return status;
    return set_out_string(toolprune::per_example_jsonl(run), per_example_jsonl);
  });
}

tp_status tp_tradeoff_csv(const char* const* report_jsons, size_t n, char** csv) {
  return guarded([&]() -> tp_status {
    if (!csv || (n > 0 && !report_jsons)) return fail(TP_EINVAL, "null argument");
    std::vector<toolprune::AggregateReport> reports;
    for (size_t i = 0; i < n; ++i) {
      if (!report_jsons[i]) return fail(TP_EINVAL, "null report");
      ordered_json j = ordered_json::parse(report_jsons[i], nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("system") ||
          !j.contains("overall") || !j["overall"].is_object()) {
        throw toolprune::ParseError("report " + std::to_string(i + 1) +
                                    " is not an eval report JSON");
      }
      toolprune::AggregateReport report;
      report.system = j["system"].get<std::string>();
      report.overall.compression = j["overall"].value("compression", 0.0);
      report.overall.recall = j["overall"].value("recall", 0.0);
      reports.push_back(std::move(report));
    }
    return set_out_string(toolprune::tradeoff_csv(toolprune::tradeoff_points(reports)), csv);
  });
}

tp_status tp_dataset_validate(const char* path, uint64_t* example_count) {
  return guarded([&]() -> tp_status {
    if (!path) return fail(TP_EINVAL, "null path");
    toolprune::Dataset ds = toolprune::load_dataset_file(path);
    if (example_count) *example_count = ds.size();
    return TP_OK;
  });
}

tp_status tp_dataset_stats(const char* path, char** stats_json) {
  return guarded([&]() -> tp_status {
    if (!path || !stats_json) return fail(TP_EINVAL, "null argument");
    toolprune::DatasetStats stats =
        toolprune::dataset_stats(toolprune::load_dataset_file(path));
    ordered_json j = toolprune::stats_to_json(stats);
    j["table"] = toolprune::stats_table_text(stats);
    return set_out_string(j.dump(2) + "\n", stats_json);
  });
}

tp_status tp_dataset_split(const char* in_path, const char* out_path,
                           const char* options_json) {
  return guarded([&]() -> tp_status {
    if (!in_path || !out_path) return fail(TP_EINVAL, "null path");
    ordered_json j = parse_options(options_json, {"train", "dev", "test", "seed"});
    toolprune::SplitConfig cfg;
    cfg.train = option_number(j, "train", cfg.train);
    cfg.dev = option_number(j, "dev", cfg.dev);
    cfg.test = option_number(j, "test", cfg.test);
    if (j.contains("seed")) cfg.seed = option_string(j, "seed");
    toolprune::Dataset ds = toolprune::load_dataset_file(in_path);
    toolprune::assign_splits(ds, cfg);
    toolprune::save_dataset_file(out_path, ds);
    return TP_OK;
  });
}

tp_status tp_dataset_curate(const char* in_path, const char* kept_path,
                            const char* review_path, char** report_json) {
  return guarded([&]() -> tp_status {
    if (!in_path || !kept_path) return fail(TP_EINVAL, "null path");
    toolprune::CurationReport report =
        toolprune::curate(toolprune::load_dataset_file(in_path));
    toolprune::save_dataset_file(kept_path, report.kept);
    if (review_path) toolprune::save_dataset_file(review_path, report.review_queue);
    return set_out_string(toolprune::curation_report_to_json(report).dump(2) + "\n",
                          report_json);
  });
}

tp_status tp_dataset_negatives(const char* in_path, const char* out_path,
                               const char* options_json) {
  return guarded([&]() -> tp_status {
    if (!in_path || !out_path) return fail(TP_EINVAL, "null path");
    ordered_json j =
        parse_options(options_json, {"count", "seed", "max_draws_per_negative"});
    toolprune::NegativeConfig cfg;
    cfg.count = option_uint(j, "count", 0);
    cfg.seed = option_uint(j, "seed", 0);
    cfg.max_draws_per_negative =
        option_uint(j, "max_draws_per_negative", cfg.max_draws_per_negative);
    toolprune::Dataset negatives =
        toolprune::generate_negatives(toolprune::load_dataset_file(in_path), cfg);
    toolprune::save_dataset_file(out_path, negatives);
    return TP_OK;
  });
}

tp_status tp_dataset_export_sft(const char* in_path, const char* out_path) {
  return guarded([&]() -> tp_status {
    if (!in_path || !out_path) return fail(TP_EINVAL, "null path");
    toolprune::save_sft_file(out_path,
                             toolprune::export_sft(toolprune::load_dataset_file(in_path)));
    return TP_OK;
  });
}

tp_status tp_dataset_label(const char* in_path, const char* out_path,
                           const char* options_json, char** skip_report_json) {
  return guarded([&]() -> tp_status {
    if (!in_path || !out_path) return fail(TP_EINVAL, "null path");
    ordered_json j = parse_options(options_json, {"endpoint", "model", "api_key_env",
                                                  "max_attempts_per_stage",
                                                  "max_query_chars"});
    toolprune::TeacherConfig cfg;
    cfg.model = option_string(j, "model");
    cfg.max_attempts_per_stage =
        static_cast<int>(option_uint(j, "max_attempts_per_stage", 3));
    cfg.max_query_chars = option_uint(j, "max_query_chars", cfg.max_query_chars);
    std::unique_ptr<toolprune::HttpChatClient> client = make_http_client(j);

    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw toolprune::IoError(std::string("cannot open ") + in_path);
    std::vector<toolprune::RawObservation> raws;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      ordered_json row = ordered_json::parse(line, nullptr, false);
      if (row.is_discarded() || !row.is_object()) {
        throw toolprune::ParseError(std::string(in_path) + ":" + std::to_string(line_no) +
                                    ": malformed JSON");
      }
      toolprune::RawObservation raw;
      raw.tool = row.value("tool", "");
      raw.background_task = row.value("background", "");
      raw.raw_text = row.value("raw_text", "");
      raws.push_back(std::move(raw));
    }

    toolprune::LabelBatchResult result = toolprune::label_batch(raws, *client, cfg);

    // Identical inputs hash to identical ids; keep the first of each.
    toolprune::Dataset unique;
    std::set<std::string> seen;
    for (toolprune::DatasetExample& ex : result.examples) {
      if (seen.insert(ex.id).second) {
        unique.push_back(std::move(ex));
      } else {
        ++result.skips["duplicate_id"];
      }
    }
    toolprune::save_dataset_file(out_path, unique);

    ordered_json skips = ordered_json::object();
    for (const auto& [reason, count] : result.skips) skips[reason] = count;
    ordered_json report;
    report["labeled"] = unique.size();
    report["skips"] = skips;
    return set_out_string(report.dump(2) + "\n", skip_report_json);
  });
}

}  // extern "C"
