#pragma once
// Independent reference implementations used only by the tests.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Majority-vote transition entry by brute-force enumeration of all 2^K
// annotator tuples. Ties (even K) go to class 0.
inline double majority_flip_binary(double flip, int k, int clean) {
  double p = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    int flips = 0;
    double prob = 1.0;
    for (int i = 0; i < k; ++i) {
      const bool f = (mask >> i) & 1;
      flips += f;
      prob *= f ? flip : 1.0 - flip;
    }
    const int ones = clean == 0 ? flips : k - flips;
    const int zeros = k - ones;
    const int vote = ones > zeros ? 1 : 0;
    if (vote != clean) p += prob;
  }
  return p;
}

// Exact majority-vote matrix for m classes by enumerating all m^K tuples.
// Ties go to the smallest index.
inline std::vector<double> majority_matrix_enum(const std::vector<double>& t, int m, int k) {
  std::vector<double> out(static_cast<std::size_t>(m * m), 0.0);
  std::vector<int> tuple(static_cast<std::size_t>(k), 0);
  std::uint64_t total = 1;
  for (int i = 0; i < k; ++i) total *= static_cast<std::uint64_t>(m);
  for (int clean = 0; clean < m; ++clean) {
    for (std::uint64_t code = 0; code < total; ++code) {
      std::uint64_t c = code;
      std::vector<int> counts(static_cast<std::size_t>(m), 0);
      double prob = 1.0;
      for (int i = 0; i < k; ++i) {
        const int lab = static_cast<int>(c % m);
        c /= m;
        ++counts[lab];
        prob *= t[clean * m + lab];
      }
      int best = 0;
      for (int j = 1; j < m; ++j)
        if (counts[j] > counts[best]) best = j;
      out[clean * m + best] += prob;
    }
  }
  return out;
}

inline double binomial(int n, int r) {
  double v = 1.0;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return v;
}

}  // namespace oracle
