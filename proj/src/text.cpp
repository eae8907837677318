#include "toolprune/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "toolprune/fuzzy.hpp"

namespace toolprune {

namespace {

// Length of the well-formed UTF-8 sequence at p, or 0 with *prefix_len set to
// the maximal subpart length (>= 1) when the sequence is ill-formed.
std::size_t utf8_sequence_length(const unsigned char* p, std::size_t avail,
                                 std::size_t* prefix_len) {
  auto cont = [](unsigned char c) { return (c & 0xC0) == 0x80; };
  unsigned char b0 = p[0];
  std::size_t need = 0;
  unsigned char lo = 0x80, hi = 0xBF;  // bounds for the first continuation
  if (b0 < 0x80) return 1;
  if (b0 < 0xC2) { *prefix_len = 1; return 0; }  // stray continuation or overlong lead
  if (b0 <= 0xDF) { need = 1; }
  else if (b0 == 0xE0) { need = 2; lo = 0xA0; }
  else if (b0 <= 0xEC) { need = 2; }
  else if (b0 == 0xED) { need = 2; hi = 0x9F; }
  else if (b0 <= 0xEF) { need = 2; }
  else if (b0 == 0xF0) { need = 3; lo = 0x90; }
  else if (b0 <= 0xF3) { need = 3; }
  else if (b0 == 0xF4) { need = 3; hi = 0x8F; }
  else { *prefix_len = 1; return 0; }

  std::size_t have = 1;
  for (std::size_t i = 1; i <= need; ++i) {
    if (have >= avail) break;
    unsigned char c = p[i];
    bool ok = (i == 1) ? (c >= lo && c <= hi) : cont(c);
    if (!ok) break;
    ++have;
  }
  if (have == need + 1) return have;
  *prefix_len = have;
  return 0;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

// Parses a leading "n:" or "n: content" rendering prefix.
bool parse_number_prefix(std::string_view line, LineIndex* n, std::string_view* content) {
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i > 9) return false;
  if (i >= line.size() || line[i] != ':') return false;
  if (i + 1 == line.size()) {
    *content = std::string_view();
  } else if (line[i + 1] == ' ') {
    *content = line.substr(i + 2);
  } else {
    return false;
  }
  LineIndex v = 0;
  for (std::size_t k = 0; k < i; ++k) v = v * 10 + static_cast<LineIndex>(line[k] - '0');
  *n = v;
  return true;
}

}  // namespace

std::string sanitize_utf8(std::string_view bytes) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(bytes.size());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t i = 0;
  while (i < bytes.size()) {
    std::size_t prefix = 0;
    std::size_t len = utf8_sequence_length(p + i, bytes.size() - i, &prefix);
    if (len > 0) {
      out.append(bytes.substr(i, len));
      i += len;
    } else {
      out.append(kReplacement);
      i += prefix;
    }
  }
  return out;
}

ToolObservation ToolObservation::from_text(std::string_view raw) {
  if (raw.empty()) throw InvalidArgument("empty observation");
  std::string text = sanitize_utf8(raw);

  ToolObservation obs;
  std::string normalized;
  normalized.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      obs.had_crlf_ = true;
      continue;
    }
    normalized.push_back(text[i]);
  }
  if (normalized.empty()) throw InvalidArgument("empty observation");

  if (normalized.back() == '\n') {
    obs.trailing_newline_ = true;
    normalized.pop_back();
  }
  obs.raw_text_ = normalized;

  std::size_t start = 0;
  for (;;) {
    std::size_t nl = normalized.find('\n', start);
    if (nl == std::string::npos) {
      obs.lines_.push_back(normalized.substr(start));
      break;
    }
    obs.lines_.push_back(normalized.substr(start, nl - start));
    start = nl + 1;
  }
  return obs;
}

const std::string& ToolObservation::line(LineIndex n) const {
  if (n < 1 || n > lines_.size()) {
    throw InvalidArgument("line index " + std::to_string(n) + " out of range for " +
                          std::to_string(lines_.size()) + "-line observation");
  }
  return lines_[n - 1];
}

std::string ToolObservation::reconstruct() const {
  std::string out;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines_[i];
  }
  if (trailing_newline_) out.push_back('\n');
  return out;
}

ToolObservation split_lines(std::string_view raw_text) {
  return ToolObservation::from_text(raw_text);
}

std::string render_numbered(const ToolObservation& obs) {
  std::string out;
  for (LineIndex n = 1; n <= obs.line_count(); ++n) {
    if (n > 1) out.push_back('\n');
    out += std::to_string(n);
    out += ": ";
    out += obs.line(n);
  }
  return out;
}

SpanSet SpanSet::normalize(std::vector<Span> spans, LineIndex line_count) {
  for (const Span& s : spans) {
    if (s.start < 1 || s.start > s.end || s.end > line_count) {
      std::ostringstream msg;
      msg << "invalid span [" << s.start << ", " << s.end << "] for " << line_count
          << "-line observation";
      throw InvalidArgument(msg.str());
    }
  }
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  SpanSet out;
  for (const Span& s : spans) {
    if (!out.spans_.empty() && s.start <= out.spans_.back().end + 1) {
      out.spans_.back().end = std::max(out.spans_.back().end, s.end);
    } else {
      out.spans_.push_back(s);
    }
  }
  return out;
}

SpanSet SpanSet::from_lineset(const LineSet& indices, LineIndex line_count) {
  LineSet sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<Span> spans;
  for (LineIndex n : sorted) {
    if (n < 1 || n > line_count) {
      throw InvalidArgument("line index " + std::to_string(n) + " out of range for " +
                            std::to_string(line_count) + "-line observation");
    }
    if (!spans.empty() && spans.back().end + 1 == n) {
      spans.back().end = n;
    } else {
      spans.push_back(Span{n, n});
    }
  }
  SpanSet out;
  out.spans_ = std::move(spans);
  return out;
}

LineSet SpanSet::to_lineset() const {
  LineSet out;
  for (const Span& s : spans_) {
    for (LineIndex n = s.start; n <= s.end; ++n) out.push_back(n);
  }
  return out;
}

std::size_t SpanSet::covered_count() const {
  std::size_t total = 0;
  for (const Span& s : spans_) total += s.end - s.start + 1;
  return total;
}

Query Query::make(std::string_view text) {
  if (normalize_ws(text).empty()) throw InvalidArgument("empty query");
  return Query{std::string(text)};
}

std::vector<Span> spanset_vector(const SpanSet& s) { return s.spans(); }

SpanSet normalize_spans(std::vector<Span> spans, LineIndex line_count) {
  return SpanSet::normalize(std::move(spans), line_count);
}

LineSet spans_to_lineset(const SpanSet& spanset) { return spanset.to_lineset(); }

SpanSet lineset_to_spans(const LineSet& indices, LineIndex line_count) {
  return SpanSet::from_lineset(indices, line_count);
}

std::string extract_span_text(const ToolObservation& obs, const SpanSet& spanset) {
  std::string out;
  bool first = true;
  for (const Span& s : spanset.spans()) {
    for (LineIndex n = s.start; n <= s.end; ++n) {
      if (!first) out.push_back('\n');
      out += obs.line(n);
      first = false;
    }
  }
  return out;
}

std::string linearize_target(const ToolObservation& obs, const SpanSet& spanset) {
  std::string out = "<relevant_lines>\n";
  for (const Span& s : spanset.spans()) {
    for (LineIndex n = s.start; n <= s.end; ++n) {
      out += std::to_string(n);
      out += ": ";
      out += obs.line(n);
      out.push_back('\n');
    }
  }
  out += "</relevant_lines>";
  return out;
}

Prediction parse_model_output(std::string_view emitted, const ToolObservation& obs) {
  static constexpr std::string_view kOpen = "<relevant_lines>";
  static constexpr std::string_view kClose = "</relevant_lines>";

  std::string_view candidate = emitted;
  std::size_t open = emitted.find(kOpen);
  if (open != std::string_view::npos) {
    std::size_t body = open + kOpen.size();
    std::size_t close = emitted.find(kClose, body);
    if (close != std::string_view::npos) candidate = emitted.substr(body, close - body);
  }

  Prediction pred;
  pred.raw_emission = std::string(candidate);

  std::size_t start = 0;
  while (start <= candidate.size()) {
    std::size_t nl = candidate.find('\n', start);
    std::string_view cand = nl == std::string_view::npos
                                ? candidate.substr(start)
                                : candidate.substr(start, nl - start);
    start = nl == std::string_view::npos ? candidate.size() + 1 : nl + 1;
    if (!cand.empty() && cand.back() == '\r') cand.remove_suffix(1);
    if (is_blank(cand)) continue;

    LineIndex aligned = 0;

    LineIndex n = 0;
    std::string_view content;
    if (parse_number_prefix(cand, &n, &content) && n >= 1 && n <= obs.line_count() &&
        fuzzy_similarity(content, obs.line(n)) > kFuzzyThreshold) {
      aligned = n;
    }
    if (!aligned) {
      for (LineIndex i = 1; i <= obs.line_count(); ++i) {
        if (obs.line(i) == cand) {
          aligned = i;
          break;
        }
      }
    }
    if (!aligned) {
      double best = kFuzzyThreshold;
      for (LineIndex i = 1; i <= obs.line_count(); ++i) {
        double sim = fuzzy_similarity(cand, obs.line(i));
        if (sim > best) {
          best = sim;
          aligned = i;
        }
      }
    }

    if (aligned) {
      pred.indices.push_back(aligned);
    } else {
      pred.unaligned_lines.emplace_back(cand);
    }
  }

  std::sort(pred.indices.begin(), pred.indices.end());
  pred.indices.erase(std::unique(pred.indices.begin(), pred.indices.end()),
                     pred.indices.end());
  return pred;
}

std::size_t whitespace_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::string predicted_text(const Prediction& pred, const ToolObservation& obs) {
  std::string out;
  bool first = true;
  for (LineIndex n : pred.indices) {
    if (!first) out.push_back('\n');
    out += obs.line(n);
    first = false;
  }
  for (const std::string& line : pred.unaligned_lines) {
    if (!first) out.push_back('\n');
    out += line;
    first = false;
  }
  return out;
}

}  // namespace toolprune
