#include "toolprune/fuzzy.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace toolprune {

std::string normalize_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return b.size();
  std::vector<std::size_t> prev(a.size() + 1);
  std::vector<std::size_t> cur(a.size() + 1);
  for (std::size_t i = 0; i <= a.size(); ++i) prev[i] = i;
  for (std::size_t j = 1; j <= b.size(); ++j) {
    cur[0] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t sub = prev[i - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[i] = std::min({prev[i] + 1, cur[i - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[a.size()];
}

double fuzzy_similarity(std::string_view a, std::string_view b) {
  std::string na = normalize_ws(a);
  std::string nb = normalize_ws(b);
  const std::string& s = na.size() <= nb.size() ? na : nb;
  const std::string& l = na.size() <= nb.size() ? nb : na;
  if (s.empty()) return l.empty() ? 1.0 : 0.0;
  if (l.find(s) != std::string::npos) return 1.0;
  const std::size_t m = s.size();
  double best = 0.0;
  for (std::size_t k = 0; k + m <= l.size(); ++k) {
    std::size_t d = levenshtein(s, std::string_view(l).substr(k, m));
    double sim = 1.0 - static_cast<double>(d) / static_cast<double>(m);
    if (sim > best) best = sim;
  }
  return best;
}

}  // namespace toolprune
