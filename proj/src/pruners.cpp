#include "toolprune/pruners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "toolprune/chat_client.hpp"
#include "toolprune/error.hpp"
#include "toolprune/hash.hpp"
#include "toolprune/prompts.hpp"

namespace toolprune {

Method method_from_name(const std::string& name) {
  if (name == "first" || name == "first_n") return Method::kFirst;
  if (name == "last" || name == "last_n") return Method::kLast;
  if (name == "random") return Method::kRandom;
  if (name == "bm25") return Method::kBm25;
  if (name == "llm") return Method::kLlm;
  if (name == "oracle") return Method::kOracle;
  throw InvalidArgument("unknown method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kFirst: return "first";
    case Method::kLast: return "last";
    case Method::kRandom: return "random";
    case Method::kBm25: return "bm25";
    case Method::kLlm: return "llm";
    case Method::kOracle: return "oracle";
  }
  throw InvalidArgument("unknown method");
}

std::string system_label(Method m) {
  switch (m) {
    case Method::kFirst: return "first_n";
    case Method::kLast: return "last_n";
    default: return method_name(m);
  }
}

LineIndex keep_count(double keep_fraction, LineIndex line_count) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw InvalidArgument("keep_fraction must be in (0, 1]");
  }
  if (line_count < 1) throw InvalidArgument("line_count must be positive");
  double x = keep_fraction * static_cast<double>(line_count);
  double nearest = std::round(x);
  // Products like 0.1 * 20 land a hair above the integer in binary floating
  // point; treat near-integers as exact so ceil does not overshoot.
  double k = std::abs(x - nearest) < 1e-9 ? nearest : std::ceil(x);
  if (k < 1.0) return 1;
  if (k > static_cast<double>(line_count)) return line_count;
  return static_cast<LineIndex>(k);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    if (alnum) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<double> bm25_line_scores(const ToolObservation& obs, const Query& query) {
  constexpr double k1 = 1.2;
  constexpr double b = 0.75;
  const LineIndex n = obs.line_count();
  std::vector<double> scores(n, 0.0);

  std::vector<std::string> query_tokens = tokenize(query.text);
  if (query_tokens.empty()) return scores;

  std::vector<std::unordered_map<std::string, std::size_t>> tf(n);
  std::vector<std::size_t> dl(n, 0);
  std::size_t total_len = 0;
  for (LineIndex i = 0; i < n; ++i) {
    for (std::string& tok : tokenize(obs.line(i + 1))) ++tf[i][std::move(tok)];
    for (const auto& [tok, count] : tf[i]) dl[i] += count;
    total_len += dl[i];
  }
  if (total_len == 0) return scores;
  const double avgdl = static_cast<double>(total_len) / static_cast<double>(n);

  std::unordered_map<std::string, double> idf;
  for (const std::string& t : query_tokens) {
    if (idf.count(t)) continue;
    std::size_t df = 0;
    for (LineIndex i = 0; i < n; ++i) df += tf[i].count(t) ? 1 : 0;
    idf[t] = std::log((static_cast<double>(n) - df + 0.5) / (df + 0.5) + 1.0);
  }

  for (LineIndex i = 0; i < n; ++i) {
    double norm = k1 * (1.0 - b + b * static_cast<double>(dl[i]) / avgdl);
    double score = 0.0;
    for (const std::string& t : query_tokens) {
      auto it = tf[i].find(t);
      if (it == tf[i].end()) continue;
      double f = static_cast<double>(it->second);
      score += idf[t] * f * (k1 + 1.0) / (f + norm);
    }
    scores[i] = score;
  }
  return scores;
}

Prediction prune_first(const ToolObservation& obs, LineIndex k) {
  Prediction pred;
  for (LineIndex i = 1; i <= k; ++i) pred.indices.push_back(i);
  return pred;
}

Prediction prune_last(const ToolObservation& obs, LineIndex k) {
  Prediction pred;
  for (LineIndex i = obs.line_count() - k + 1; i <= obs.line_count(); ++i) {
    pred.indices.push_back(i);
  }
  return pred;
}

Prediction prune_random(const ToolObservation& obs, LineIndex k, std::uint64_t seed,
                        const std::string& example_id) {
  std::mt19937_64 rng(seed ^ fnv1a64(example_id));
  Prediction pred;
  for (std::uint32_t zero_based : sample_without_replacement(obs.line_count(), k, rng)) {
    pred.indices.push_back(zero_based + 1);
  }
  std::sort(pred.indices.begin(), pred.indices.end());
  return pred;
}

Prediction prune_bm25(const ToolObservation& obs, const Query& query, LineIndex k) {
  std::vector<double> scores = bm25_line_scores(obs, query);
  std::vector<LineIndex> order(obs.line_count());
  std::iota(order.begin(), order.end(), 1u);
  std::stable_sort(order.begin(), order.end(), [&](LineIndex a, LineIndex b) {
    return scores[a - 1] > scores[b - 1];  // ties keep the smaller index first
  });
  Prediction pred;
  pred.indices.assign(order.begin(), order.begin() + k);
  std::sort(pred.indices.begin(), pred.indices.end());
  return pred;
}

Prediction prune_oracle(const ToolObservation& obs, const SpanSet& gold) {
  for (LineIndex n : gold.to_lineset()) obs.line(n);  // range check
  Prediction pred;
  pred.indices = gold.to_lineset();
  return pred;
}

Prediction prune_llm(const ToolObservation& obs, const Query& query, ChatClient& client,
                     const std::string& model) {
  ChatRequest req;
  req.model = model;
  req.temperature = 0.0;
  req.messages.push_back({"user", build_prune_prompt(obs, query)});
  std::string response = client.complete(req);
  return parse_model_output(response, obs);
}

Prediction prune(const ToolObservation& obs, const Query& query, const PruneConfig& cfg) {
  switch (cfg.method) {
    case Method::kFirst:
      return prune_first(obs, keep_count(cfg.keep_fraction, obs.line_count()));
    case Method::kLast:
      return prune_last(obs, keep_count(cfg.keep_fraction, obs.line_count()));
    case Method::kRandom:
      return prune_random(obs, keep_count(cfg.keep_fraction, obs.line_count()), cfg.seed,
                          cfg.example_id);
    case Method::kBm25:
      return prune_bm25(obs, query, keep_count(cfg.keep_fraction, obs.line_count()));
    case Method::kOracle:
      if (!cfg.gold) throw InvalidArgument("oracle method requires gold spans");
      return prune_oracle(obs, *cfg.gold);
    case Method::kLlm:
      if (!cfg.client) throw InvalidArgument("llm method requires an endpoint client");
      return prune_llm(obs, query, *cfg.client, cfg.model);
  }
  throw InvalidArgument("unknown method");
}

}  // namespace toolprune
