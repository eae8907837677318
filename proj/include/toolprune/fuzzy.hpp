#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace toolprune {

// Trims leading/trailing whitespace and collapses interior runs to one space.
std::string normalize_ws(std::string_view s);

// Levenshtein distance with unit costs.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Whitespace-insensitive similarity in [0, 1].
//
// Both inputs are whitespace-normalized first. With s the shorter and l the
// longer: both empty yields 1, one empty yields 0, s a substring of l yields
// 1, otherwise the maximum over all |s|-length windows w of l of
// 1 - levenshtein(s, w) / |s|.
//
// Symmetric, reflexive on nonempty strings, and flat-maximal: no window
// scores higher than an exact substring hit.
double fuzzy_similarity(std::string_view a, std::string_view b);

// The alignment threshold used everywhere a fuzzy match gates a decision:
// similarities must be strictly greater than this to count.
inline constexpr double kFuzzyThreshold = 0.5;

}  // namespace toolprune
