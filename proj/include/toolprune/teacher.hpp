#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toolprune/chat_client.hpp"
#include "toolprune/dataset.hpp"
#include "toolprune/text.hpp"

namespace toolprune {

// Raised when an input cannot yield a usable labeled example; carries a
// machine-readable reason for the skip report. Batch labeling catches it and
// moves on rather than aborting.
class LabelSkip : public Error {
 public:
  LabelSkip(std::string reason, const std::string& detail)
      : Error(reason + ": " + detail), reason_(std::move(reason)) {}
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
};

// Raw material for one synthetic example.
struct RawObservation {
  std::string tool;
  std::string background_task;
  std::string raw_text;
};

struct TeacherConfig {
  std::string model;
  int max_attempts_per_stage = 3;   // >= 1
  std::size_t max_query_chars = 400;
  double retry_temperature = 0.7;   // first attempt always runs at 0
};

// Two-stage teacher labeling over a chat endpoint.
//
// Stage 1 synthesizes a focused extraction query; candidates that are empty,
// longer than max_query_chars, or contain the wrapper tag grammar are
// rejected and retried. Stage 2 shows the numbered rendering and parses the
// answer as JSON [start, end] pairs, normalized onto the raw lines; spans
// must then pass validate_support. Either stage exhausting its attempts, or
// validation failing, raises LabelSkip.
//
// The id is "gen-" + first 16 hex chars of sha256 over tool, background,
// and raw text joined by 0x1f, so identical inputs always collide.
DatasetExample label_example(const RawObservation& raw, ChatClient& client,
                             const TeacherConfig& cfg);

struct LabelBatchResult {
  Dataset examples;
  std::map<std::string, std::size_t> skips;  // reason -> count
};

// Never aborts on a single bad input; each failure lands in the skip report.
LabelBatchResult label_batch(const std::vector<RawObservation>& raws, ChatClient& client,
                             const TeacherConfig& cfg);

// Stage pieces, exposed for direct testing.
std::string synthesize_query(const RawObservation& raw, const ToolObservation& obs,
                             ChatClient& client, const TeacherConfig& cfg);
SpanSet select_spans(const ToolObservation& obs, const Query& query, ChatClient& client,
                     const TeacherConfig& cfg);

// Parses a teacher span response: the first JSON array in the text whose
// elements are [start, end] integer pairs. Returns nullopt when none parses.
std::optional<std::vector<Span>> parse_span_response(std::string_view text);

// A labeled positive is supported when the span set is nonempty, in range,
// extracts text that is nonempty after trimming, and covers at most the
// overly-broad fraction of the observation. Throws LabelSkip with reason
// unsupported, empty_text, or overly_broad.
void validate_support(const ToolObservation& obs, const Query& query, const SpanSet& gold);

std::string synthetic_id(const RawObservation& raw);

}  // namespace toolprune
