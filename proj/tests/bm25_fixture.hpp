#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "prism/evidence.hpp"

namespace prism::testing {

inline std::vector<Passage> bm25_fixture() {
  return {
      {"Deuce High", {"Deuce High is a 1926 Western film.", "It was directed by Richard Thorpe."}},
      {"The King is the Best Mayor", {"The King is the Best Mayor is a 1974 Spanish film.",
                                      "The king helps a mayor in a village dispute."}},
      {"Richard Thorpe", {"Richard Thorpe was an American film director."}},
      {"Rafael Gil", {"Rafael Gil was a Spanish film director."}},
      {"Mayor of Casterbridge", {"The Mayor of Casterbridge is a novel.", "A mayor falls from grace."}},
  };
}

/// Direct formula evaluation from whitespace/punctuation split counts given
/// by hand, independent of the index.
inline double bm25_by_formula(const std::vector<std::map<std::string, int>>& tf,
                              const std::vector<int>& lengths, const std::vector<std::string>& query,
                              std::size_t doc, double k1 = 1.2, double b = 0.75) {
  const double n = static_cast<double>(tf.size());
  double avg = 0;
  for (int l : lengths) avg += l;
  avg /= n;
  double s = 0;
  for (const auto& term : query) {
    double df = 0;
    for (const auto& d : tf) df += d.count(term) ? 1 : 0;
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const auto it = tf[doc].find(term);
    const double f = it == tf[doc].end() ? 0.0 : it->second;
    s += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * lengths[doc] / avg));
  }
  return s;
}

}  // namespace prism::testing
