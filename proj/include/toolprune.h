/* C interface to the tool-output pruning library.
 *
 * Conventions:
 *   - Every function that can fail returns tp_status; TP_OK is 0.
 *   - On failure, tp_last_error() returns a thread-local message that stays
 *     valid until the next failing call on the same thread.
 *   - Functions returning strings allocate them; free with tp_string_free.
 *   - Handles are opaque; free with the matching *_free (NULL is a no-op).
 *   - Line indices are 1-based; spans are inclusive [start, end] pairs.
 *   - Structured options travel as UTF-8 JSON strings to keep this surface
 *     small and forward-compatible; unknown option keys are rejected.
 */

#ifndef TOOLPRUNE_H
#define TOOLPRUNE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tp_status {
  TP_OK = 0,
  TP_EINVAL = 1,    /* invalid argument or option */
  TP_EPARSE = 2,    /* malformed input data */
  TP_EIO = 3,       /* file system failure */
  TP_EENDPOINT = 4, /* chat endpoint failed after retries */
  TP_EINTERNAL = 5
} tp_status;

const char* tp_version(void);
const char* tp_last_error(void);
void tp_string_free(char* s);

/* ---- observations ---- */

typedef struct tp_observation tp_observation;

/* Splits raw tool output into lines. Empty input is TP_EINVAL. */
tp_status tp_observation_create(const char* raw_text, tp_observation** out);
void tp_observation_free(tp_observation* obs);

uint32_t tp_observation_line_count(const tp_observation* obs);
/* Borrowed pointer, valid for the lifetime of the observation. */
tp_status tp_observation_line(const tp_observation* obs, uint32_t index, const char** out);
tp_status tp_observation_render_numbered(const tp_observation* obs, char** out);

/* ---- span sets ---- */

typedef struct tp_spanset tp_spanset;

/* pairs is [s1, e1, s2, e2, ...]; spans are validated against line_count,
 * then sorted and merged. n_spans of 0 creates the empty set. */
tp_status tp_spanset_create(const uint32_t* pairs, size_t n_spans, uint32_t line_count,
                            tp_spanset** out);
void tp_spanset_free(tp_spanset* ss);

size_t tp_spanset_size(const tp_spanset* ss);
tp_status tp_spanset_get(const tp_spanset* ss, size_t i, uint32_t* start, uint32_t* end);
/* Verbatim covered lines joined by '\n'. */
tp_status tp_spanset_extract(const tp_observation* obs, const tp_spanset* ss, char** out);
/* Numbered covered lines inside a <relevant_lines> block. */
tp_status tp_spanset_linearize(const tp_observation* obs, const tp_spanset* ss, char** out);

/* ---- predictions ---- */

typedef struct tp_prediction tp_prediction;

/* Total parse of untrusted model output back onto source line indices. */
tp_status tp_parse_model_output(const tp_observation* obs, const char* emitted,
                                tp_prediction** out);
void tp_prediction_free(tp_prediction* pred);

size_t tp_prediction_index_count(const tp_prediction* pred);
/* Copies all indices (ascending) into buf, which holds at least
 * tp_prediction_index_count entries. */
tp_status tp_prediction_indices(const tp_prediction* pred, uint32_t* buf);
size_t tp_prediction_unaligned_count(const tp_prediction* pred);
tp_status tp_prediction_unaligned_line(const tp_prediction* pred, size_t i, const char** out);
/* Verbatim text of the aligned indices; numbered != 0 prefixes "n: ". */
tp_status tp_prediction_extract(const tp_observation* obs, const tp_prediction* pred,
                                int numbered, char** out);

/* ---- pruning ---- */

/* options_json keys:
 *   method        "first" | "last" | "random" | "bm25" | "llm" | "oracle"
 *   keep_fraction number in (0, 1], default 0.1
 *   seed          unsigned integer, default 0
 *   example_id    string, salts the random method's stream, default ""
 *   gold          [[start, end], ...]  (oracle method)
 *   endpoint      string (llm method)
 *   model         string (llm method)
 *   api_key_env   environment variable naming the bearer token, optional
 */
tp_status tp_prune(const tp_observation* obs, const char* query, const char* options_json,
                   tp_prediction** out);

/* ---- scoring ---- */

double tp_fuzzy_similarity(const char* a, const char* b);

typedef struct tp_metrics_row {
  double precision;
  double recall;
  double f1;
  double strict_precision;
  double strict_recall;
  double strict_f1;
  double compression;
  int exact_match;
  int is_negative;
  int empty_prediction;
  uint64_t predicted_lines;
  uint64_t gold_lines;
  uint64_t unaligned_lines;
} tp_metrics_row;

tp_status tp_score_example(const tp_observation* obs, const tp_prediction* pred,
                           const tp_spanset* gold, tp_metrics_row* out);

/* ---- batch evaluation ---- */

/* Evaluates a benchmark JSONL file. options_json keys: method, keep_fraction,
 * seed, split, workers, system, endpoint, model, api_key_env, command (manifest
 * label). Outputs are allocated strings: the aggregate report as JSON and the
 * per-example rows as JSONL. Either out pointer may be NULL to skip it. */
tp_status tp_eval_file(const char* dataset_path, const char* options_json,
                       char** report_json, char** per_example_jsonl);

/* Builds the trade-off CSV (header system,compression,recall) from aggregate
 * report JSONs as produced by tp_eval_file. */
tp_status tp_tradeoff_csv(const char* const* report_jsons, size_t n, char** csv);

/* ---- dataset lifecycle ---- */

/* Strict load; on success optionally returns the line count. */
tp_status tp_dataset_validate(const char* path, uint64_t* example_count);
tp_status tp_dataset_stats(const char* path, char** stats_json);
/* options_json keys: train, dev, test (ratios summing to 1), seed (string). */
tp_status tp_dataset_split(const char* in_path, const char* out_path,
                           const char* options_json);
/* review_path may be NULL; report_json may be NULL. */
tp_status tp_dataset_curate(const char* in_path, const char* kept_path,
                            const char* review_path, char** report_json);
/* options_json keys: count, seed, max_draws_per_negative. */
tp_status tp_dataset_negatives(const char* in_path, const char* out_path,
                               const char* options_json);
tp_status tp_dataset_export_sft(const char* in_path, const char* out_path);
/* Labels raw observations (JSONL rows {tool, background, raw_text}) through a
 * teacher endpoint. options_json keys: endpoint, model, api_key_env,
 * max_attempts_per_stage, max_query_chars. skip_report_json may be NULL. */
tp_status tp_dataset_label(const char* in_path, const char* out_path,
                           const char* options_json, char** skip_report_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TOOLPRUNE_H */
