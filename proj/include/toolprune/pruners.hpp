#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "toolprune/text.hpp"

namespace toolprune {

class ChatClient;

enum class Method {
  kFirst,
  kLast,
  kRandom,
  kBm25,
  kLlm,
  kOracle,
};

Method method_from_name(const std::string& name);
std::string method_name(Method m);
// Default report label: first_n / last_n / random / bm25 / llm / oracle.
std::string system_label(Method m);

struct PruneConfig {
  Method method = Method::kBm25;
  double keep_fraction = 0.1;
  std::uint64_t seed = 0;
  // LLM method only.
  ChatClient* client = nullptr;
  std::string model;
  // Oracle method only.
  const SpanSet* gold = nullptr;
  // Stable per-example stream splitting for the random method.
  std::string example_id;
};

// ceil(keep_fraction * line_count) clamped to [1, line_count]; products within
// 1e-9 of an integer round to it first so 0.1 * 20 keeps 2 lines, not 3.
LineIndex keep_count(double keep_fraction, LineIndex line_count);

// Lowercased maximal ASCII alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

// Okapi BM25 of the query against each line, lines as documents, the
// observation as the corpus. k1 = 1.2, b = 0.75, idf = ln((N-df+.5)/(df+.5)+1).
// All-empty lines (avgdl 0) score 0 everywhere.
std::vector<double> bm25_line_scores(const ToolObservation& obs, const Query& query);

// Applies one pruning method. Every method is total: given a valid
// observation and config it always returns a prediction (the LLM method
// throws EndpointError only when the transport fails after retries).
Prediction prune(const ToolObservation& obs, const Query& query, const PruneConfig& cfg);

// Individual strategies, exposed for direct testing.
Prediction prune_first(const ToolObservation& obs, LineIndex k);
Prediction prune_last(const ToolObservation& obs, LineIndex k);
Prediction prune_random(const ToolObservation& obs, LineIndex k, std::uint64_t seed,
                        const std::string& example_id);
Prediction prune_bm25(const ToolObservation& obs, const Query& query, LineIndex k);
Prediction prune_oracle(const ToolObservation& obs, const SpanSet& gold);
Prediction prune_llm(const ToolObservation& obs, const Query& query, ChatClient& client,
                     const std::string& model);

}  // namespace toolprune
