#include "toolprune/teacher.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"
#include "toolprune/fuzzy.hpp"
#include "toolprune/hash.hpp"
#include "toolprune/prompts.hpp"
#include "toolprune/pruners.hpp"

namespace toolprune {

namespace {

using nlohmann::json;

constexpr const char* kTagGrammar[] = {"<relevant_lines>", "</relevant_lines>",
                                       "<query>",          "</query>",
                                       "<tool_output>",    "</tool_output>"};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string complete_at(ChatClient& client, const TeacherConfig& cfg,
                        const std::string& prompt, double temperature) {
  ChatRequest req;
  req.model = cfg.model;
  req.temperature = temperature;
  req.messages.push_back({"user", prompt});
  return client.complete(req);
}

}  // namespace

std::string synthetic_id(const RawObservation& raw) {
  std::string key = raw.tool;
  key.push_back('\x1f');
  key += raw.background_task;
  key.push_back('\x1f');
  key += raw.raw_text;
  return "gen-" + sha256_hex(key).substr(0, 16);
}

std::string synthesize_query(const RawObservation& raw, const ToolObservation& obs,
                             ChatClient& client, const TeacherConfig& cfg) {
  if (cfg.max_attempts_per_stage < 1) throw InvalidArgument("attempts must be >= 1");
  std::string prompt = build_query_synthesis_prompt(raw.tool, raw.background_task, obs);
  std::string last = "no attempt made";
  for (int attempt = 0; attempt < cfg.max_attempts_per_stage; ++attempt) {
    double temperature = attempt == 0 ? 0.0 : cfg.retry_temperature;
    std::string candidate = trim(complete_at(client, cfg, prompt, temperature));
    if (candidate.empty()) {
      last = "empty query";
      continue;
    }
    if (candidate.size() > cfg.max_query_chars) {
      last = "query longer than " + std::to_string(cfg.max_query_chars) + " characters";
      continue;
    }
    bool tainted = false;
    for (const char* tag : kTagGrammar) {
      if (candidate.find(tag) != std::string::npos) {
        last = std::string("query contains tag grammar ") + tag;
        tainted = true;
        break;
      }
    }
    if (tainted) continue;
    return candidate;
  }
  throw LabelSkip("query_rejected", last);
}

std::optional<std::vector<Span>> parse_span_response(std::string_view text) {
  for (std::size_t start = text.find('['); start != std::string_view::npos;
       start = text.find('[', start + 1)) {
    std::size_t end = std::string_view::npos;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '[') ++depth;
      else if (c == ']' && --depth == 0) {
        end = i;
        break;
      }
    }
    if (end == std::string_view::npos) continue;

    json j = json::parse(text.substr(start, end - start + 1), nullptr, false);
    if (j.is_discarded() || !j.is_array()) continue;

    auto in_range = [](const json& v) {
      return v.is_number_integer() && v.get<long long>() >= 1 &&
             v.get<long long>() <= 0xFFFFFFFFLL;
    };
    std::vector<Span> spans;
    if (j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer()) {
      // A flat [start, end] pair counts as one span.
      if (!in_range(j[0]) || !in_range(j[1])) continue;
      spans.push_back(Span{j[0].get<LineIndex>(), j[1].get<LineIndex>()});
      return spans;
    }
    bool ok = true;
    for (const json& pair : j) {
      if (!pair.is_array() || pair.size() != 2 || !in_range(pair[0]) || !in_range(pair[1])) {
        ok = false;
        break;
      }
      spans.push_back(Span{pair[0].get<LineIndex>(), pair[1].get<LineIndex>()});
    }
    if (ok) return spans;
  }
  return std::nullopt;
}

SpanSet select_spans(const ToolObservation& obs, const Query& query, ChatClient& client,
                     const TeacherConfig& cfg) {
  if (cfg.max_attempts_per_stage < 1) throw InvalidArgument("attempts must be >= 1");
  std::string prompt = build_span_selection_prompt(obs, query);
  std::string last = "no attempt made";
  for (int attempt = 0; attempt < cfg.max_attempts_per_stage; ++attempt) {
    double temperature = attempt == 0 ? 0.0 : cfg.retry_temperature;
    std::string response = complete_at(client, cfg, prompt, temperature);
    std::optional<std::vector<Span>> spans = parse_span_response(response);
    if (!spans) {
      last = "no [start, end] pair array in response";
      continue;
    }
    try {
      return SpanSet::normalize(std::move(*spans), obs.line_count());
    } catch (const InvalidArgument& e) {
      last = e.what();
    }
  }
  throw LabelSkip("span_rejected", last);
}

void validate_support(const ToolObservation& obs, const Query& query, const SpanSet& gold) {
  (void)query;
  if (gold.empty()) throw LabelSkip("unsupported", "empty span set");
  std::string text;
  try {
    text = extract_span_text(obs, gold);
  } catch (const InvalidArgument& e) {
    throw LabelSkip("unsupported", e.what());
  }
  if (normalize_ws(text).empty()) {
    throw LabelSkip("empty_text", "gold spans cover only whitespace");
  }
  double coverage =
      static_cast<double>(gold.covered_count()) / static_cast<double>(obs.line_count());
  if (coverage > CurationThresholds{}.overly_broad_fraction) {
    throw LabelSkip("overly_broad",
                    "gold covers " + std::to_string(gold.covered_count()) + " of " +
                        std::to_string(obs.line_count()) + " lines");
  }
}

DatasetExample label_example(const RawObservation& raw, ChatClient& client,
                             const TeacherConfig& cfg) {
  if (raw.tool.empty()) throw LabelSkip("invalid_observation", "missing tool label");
  ToolObservation obs;
  try {
    obs = ToolObservation::from_text(raw.raw_text);
  } catch (const InvalidArgument& e) {
    throw LabelSkip("invalid_observation", e.what());
  }
  Query query = Query::make(synthesize_query(raw, obs, client, cfg));
  SpanSet gold = select_spans(obs, query, client, cfg);
  validate_support(obs, query, gold);

  DatasetExample ex;
  ex.id = synthetic_id(raw);
  ex.source = Source::kSyntheticPos;
  ex.tool = raw.tool;
  ex.query = query.text;
  // Gold spans were selected against the sanitized observation, and raw bytes
  // that are not valid UTF-8 cannot be serialized to JSON.
  ex.tool_output = sanitize_utf8(raw.raw_text);
  ex.gold_spans = std::move(gold);
  if (!raw.background_task.empty()) ex.extras["background_task"] = raw.background_task;
  return ex;
}

LabelBatchResult label_batch(const std::vector<RawObservation>& raws, ChatClient& client,
                             const TeacherConfig& cfg) {
  LabelBatchResult result;
  for (const RawObservation& raw : raws) {
    try {
      result.examples.push_back(label_example(raw, client, cfg));
    } catch (const LabelSkip& skip) {
      ++result.skips[skip.reason()];
    } catch (const EndpointError&) {
      ++result.skips["endpoint_error"];
    }
  }
  return result;
}

}  // namespace toolprune
