// Copyright 2026 The zcforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// O(n^2) pair counting for tau-b and counting midranks for rho.

#ifndef ZCFORGE_TESTS_RANK_ORACLE_HPP_
#define ZCFORGE_TESTS_RANK_ORACLE_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

namespace zcforge::oracle {

// NaN when undefined.
inline double brute_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::int64_t conc = 0, disc = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // comparisons, not differences: -inf entries must tie with each other
      const int dx = (x[i] > x[j]) - (x[i] < x[j]);
      const int dy = (y[i] > y[j]) - (y[i] < y[j]);
      if (dx == 0) ++tx;
      if (dy == 0) ++ty;
      if (dx == 0 || dy == 0) continue;
      (dx == dy ? conc : disc)++;
    }
  }
  const std::int64_t n0 = static_cast<std::int64_t>(n * (n - 1) / 2);
  if (n0 == tx || n0 == ty) return NAN;
  return static_cast<double>(conc - disc) /
         std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
}

// Twice the midrank, so every value is an integer.
inline std::vector<std::int64_t> doubled_midranks(const std::vector<double>& x) {
  std::vector<std::int64_t> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::int64_t less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = 2 * less + equal + 1;
  }
  return r;
}

inline double brute_rho(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = doubled_midranks(x);
  const auto ry = doubled_midranks(y);
  const std::int64_t c = static_cast<std::int64_t>(x.size()) + 1;  // twice the mean rank
  std::int64_t sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - c) * (ry[i] - c);
    sxx += (rx[i] - c) * (rx[i] - c);
    syy += (ry[i] - c) * (ry[i] - c);
  }
  if (sxx == 0 || syy == 0) return NAN;
  return static_cast<double>(sxy) /
         std::sqrt(static_cast<double>(sxx) * static_cast<double>(syy));
}

}  // namespace zcforge::oracle

#endif  // ZCFORGE_TESTS_RANK_ORACLE_HPP_
