#pragma once

#include <string>

#include "toolprune/text.hpp"

namespace toolprune {

// Version tag emitted into run manifests; bump on any prompt text change.
extern const char* const kPromptVersion;

// Pruning prompt sent to a chat endpoint: fixed instruction preamble, the
// query, then the numbered observation. The preamble never contains the
// literal <query> or <tool_output> tag names, so each block appears in the
// assembled prompt exactly once.
std::string build_prune_prompt(const ToolObservation& obs, const Query& query);

// Teacher stage 1: synthesize a plausible extraction query for a raw tool
// output given short background context.
std::string build_query_synthesis_prompt(const std::string& tool_name,
                                         const std::string& background,
                                         const ToolObservation& obs);

// Teacher stage 2: select gold spans for a query as a JSON array of
// [start, end] pairs over the numbered rendering.
std::string build_span_selection_prompt(const ToolObservation& obs, const Query& query);

}  // namespace toolprune
