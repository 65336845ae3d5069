#pragma once

// Shared builders and brute-force oracles for the unit tests.  The oracles
// here are deliberately naive (plain loops over all cells) so they stay
// independent of the library's own algorithms.

#include <cmath>
#include <cstdint>
#include <vector>

#include "bridgekit/measure.hpp"

namespace testutil {

inline bridgekit::StateSpace make_space(int n) {
  bridgekit::StateSpace s;
  for (int i = 0; i < n; ++i) s.labels.push_back("s" + std::to_string(i));
  return s;
}

inline bridgekit::DensePathMeasure make_path_measure(int n, int K, std::vector<double> w) {
  return bridgekit::make_dense(make_space(n), bridgekit::uniform_grid(K), std::move(w));
}

// Iterates over all paths: returns false when the odometer wraps.
inline bool next_path(std::vector<int>& path, int n) {
  for (int i = static_cast<int>(path.size()) - 1; i >= 0; --i) {
    if (++path[i] < n) return true;
    path[i] = 0;
  }
  return false;
}

// Naive marginal: explicit loop over every path.
inline std::vector<double> marginal_oracle(const bridgekit::DensePathMeasure& q,
                                           const std::vector<int>& coords) {
  const int n = q.n();
  std::int64_t out_cells = 1;
  for (std::size_t i = 0; i < coords.size(); ++i) out_cells *= n;
  std::vector<double> out(out_cells, 0.0);
  std::vector<int> path(q.K(), 0);
  std::int64_t flat = 0;
  do {
    std::int64_t idx = 0;
    for (int c : coords) idx = idx * n + path[c];
    out[idx] += q.w[flat];
    ++flat;
  } while (next_path(path, n));
  return out;
}

// Naive relative entropy: term-by-term sum; +infinity when p escapes r.
inline double entropy_oracle(const std::vector<double>& p, const std::vector<double>& r) {
  double h = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (r[i] <= 0) return std::numeric_limits<double>::infinity();
    h += p[i] * std::log(p[i] / r[i]);
  }
  return h;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
