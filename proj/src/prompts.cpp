#include "toolprune/prompts.hpp"

namespace toolprune {

const char* const kPromptVersion = "prompts-v1";

namespace {

// Verbatim instruction preamble for the pruning prompt. The query and tool
// output are appended as tag blocks after it; keep their tag names out of
// this text so the assembled prompt contains each block exactly once.
constexpr const char* kPrunePreamble =
    "Select the lines from the numbered tool output below that answer the extraction "
    "query below.\n"
    "Rules:\n"
    "- Copy selected lines verbatim, keeping their \"n: \" number prefixes.\n"
    "- Keep the selection minimal: only lines that directly answer the query.\n"
    "- Wrap the selection in a block:\n"
    "<relevant_lines>\n"
    "n: line text\n"
    "</relevant_lines>\n"
    "- If no lines are relevant, emit an empty block:\n"
    "<relevant_lines>\n"
    "</relevant_lines>\n"
    "Do not add commentary outside the block.";

}  // namespace

std::string build_prune_prompt(const ToolObservation& obs, const Query& query) {
  std::string out = kPrunePreamble;
  out += "\n\n<query>\n";
  out += query.text;
  out += "\n</query>\n<tool_output>\n";
  out += render_numbered(obs);
  out += "\n</tool_output>";
  return out;
}

std::string build_query_synthesis_prompt(const std::string& tool_name,
                                         const std::string& background,
                                         const ToolObservation& obs) {
  std::string out =
      "Write one focused extraction query for the tool output below: a single "
      "sentence, under 400 characters, describing exactly what a developer working "
      "on the task would need from this output. Respond with the query text only, "
      "no quotes, no markup.\n\nTask context:\n";
  out += background;
  out += "\n\nTool: ";
  out += tool_name;
  out += "\n\nTool output:\n";
  out += obs.raw_text();
  return out;
}

std::string build_span_selection_prompt(const ToolObservation& obs, const Query& query) {
  std::string out =
      "Given the extraction query below, select the smallest contiguous span or set "
      "of spans from the numbered tool output that answers it. Respond with a JSON "
      "array of [start, end] line-number pairs, inclusive, for example "
      "[[12, 14], [30, 30]]. Respond with the JSON array only.\n\nQuery:\n";
  out += query.text;
  out += "\n\nNumbered tool output:\n";
  out += render_numbered(obs);
  return out;
}

}  // namespace toolprune
