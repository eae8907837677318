#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "toolprune/error.hpp"

namespace toolprune {

using LineIndex = std::uint32_t;  // 1-based
using LineSet = std::vector<LineIndex>;  // sorted ascending, no duplicates

// One raw tool output, decomposed into lines with exact reconstruction.
//
// raw_text() is the ingested form: invalid UTF-8 sequences are replaced with
// U+FFFD and CRLF pairs are normalized to LF (had_crlf() records that this
// happened). A final newline produces no empty trailing line; the
// trailing_newline() flag preserves exact reconstruction instead.
class ToolObservation {
 public:
  static ToolObservation from_text(std::string_view raw);

  const std::string& raw_text() const { return raw_text_; }
  const std::vector<std::string>& lines() const { return lines_; }
  LineIndex line_count() const { return static_cast<LineIndex>(lines_.size()); }
  // 1-based access; throws InvalidArgument when out of range.
  const std::string& line(LineIndex n) const;
  bool trailing_newline() const { return trailing_newline_; }
  bool had_crlf() const { return had_crlf_; }

  // Joins lines with '\n' and re-appends the trailing newline; equals raw_text().
  std::string reconstruct() const;

 private:
  std::string raw_text_;
  std::vector<std::string> lines_;
  bool trailing_newline_ = false;
  bool had_crlf_ = false;
};

// Contiguous inclusive range of 1-based line indices.
struct Span {
  LineIndex start = 0;
  LineIndex end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

// Normalized set of spans: sorted ascending, pairwise disjoint, never adjacent
// (touching spans are merged at normalization). May be empty.
class SpanSet {
 public:
  SpanSet() = default;

  // Sorts, merges overlapping and adjacent spans. Validates each span against
  // line_count; throws InvalidArgument naming the offending span.
  static SpanSet normalize(std::vector<Span> spans, LineIndex line_count);

  // Minimal SpanSet covering exactly the given indices.
  static SpanSet from_lineset(const LineSet& indices, LineIndex line_count);

  const std::vector<Span>& spans() const { return spans_; }
  bool empty() const { return spans_.empty(); }
  std::size_t size() const { return spans_.size(); }

  LineSet to_lineset() const;
  // Number of lines covered.
  std::size_t covered_count() const;

  friend bool operator==(const SpanSet&, const SpanSet&) = default;

 private:
  std::vector<Span> spans_;
};

// A short task-conditioned extraction query. Nonempty after trimming.
struct Query {
  std::string text;

  static Query make(std::string_view text);
};

// A set of predicted line indices plus the raw emitted text it was parsed
// from. Emitted lines that could not be aligned to any source line are kept:
// they count toward predicted token mass and as unmatched predictions, but
// never match gold.
struct Prediction {
  LineSet indices;
  std::string raw_emission;
  std::vector<std::string> unaligned_lines;

  std::size_t unaligned_line_count() const { return unaligned_lines.size(); }
  bool empty() const { return indices.empty() && unaligned_lines.empty(); }
};

// Splits raw tool output into lines. Errors on empty input.
ToolObservation split_lines(std::string_view raw_text);

// "<n>: <content>" per line, n unpadded decimal starting at 1, joined by '\n'.
std::string render_numbered(const ToolObservation& obs);

std::vector<Span> spanset_vector(const SpanSet& s);  // convenience for tests

// Free-function forms of the SpanSet conversions.
SpanSet normalize_spans(std::vector<Span> spans, LineIndex line_count);
LineSet spans_to_lineset(const SpanSet& spanset);
SpanSet lineset_to_spans(const LineSet& indices, LineIndex line_count);

// Covered lines in source order joined by '\n'; byte-for-byte verbatim.
std::string extract_span_text(const ToolObservation& obs, const SpanSet& spanset);

// Numbered covered lines wrapped in <relevant_lines> tags; the generative
// training target format.
std::string linearize_target(const ToolObservation& obs, const SpanSet& spanset);

// Totally parses untrusted model output back onto source line indices.
// If a <relevant_lines> block exists its interior is the candidate text,
// otherwise the whole emission is (so chatty refusals count as non-empty
// predictions). Candidate lines align to source lines first by their
// "<n>: " prefix (content must match line n with fuzzy similarity > 0.5),
// else by exact content search, else by best fuzzy match > 0.5.
Prediction parse_model_output(std::string_view emitted, const ToolObservation& obs);

// Replaces invalid UTF-8 with U+FFFD (one replacement per maximal invalid
// subpart).
std::string sanitize_utf8(std::string_view bytes);

// Count of maximal whitespace-delimited tokens.
std::size_t whitespace_token_count(std::string_view text);

// Verbatim text a prediction stands for: extracted aligned lines followed by
// any unaligned emitted lines, joined by '\n'. This is the predicted token
// mass used for compression.
std::string predicted_text(const Prediction& pred, const ToolObservation& obs);

}  // namespace toolprune
