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

#include "zcforge/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace zcforge {

ScoreResult score_network(const ExprProgram& p, const NetworkRecord& net,
                          bool keep_per_block) {
  ScoreResult r;
  r.network_id = net.id;
  if (net.blocks.empty()) return r;
  double sum = 0.0;
  bool ok = true;
  for (const BlockStats& b : net.blocks) {
    const auto s = block_scalar(p, b);
    if (keep_per_block) r.per_block.push_back(s);
    if (!s) {
      ok = false;
      if (!keep_per_block) break;
      continue;
    }
    sum += *s;
  }
  if (!ok) return r;
  const double mean = sum / static_cast<double>(net.blocks.size());
  if (std::isfinite(mean)) r.score = mean;
  return r;
}

namespace {

std::vector<double> lowered(std::span<const std::optional<double>> scores) {
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = scores[i] && !std::isnan(*scores[i]) ? *scores[i]
                                                  : -std::numeric_limits<double>::infinity();
  }
  return out;
}

Scores lift(std::span<const double> scores) {
  Scores out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isnan(scores[i])) out[i] = scores[i];
  }
  return out;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("score and accuracy lengths differ");
  if (a < 2) throw std::invalid_argument("correlation needs at least 2 pairs");
}

// Sum of t(t-1)/2 over runs of equal values in a sorted sequence.
template <typename It, typename Eq>
std::int64_t tied_pairs(It begin, It end, Eq eq) {
  std::int64_t total = 0;
  for (It i = begin; i != end;) {
    It j = i;
    std::int64_t t = 0;
    while (j != end && eq(*i, *j)) {
      ++j;
      ++t;
    }
    total += t * (t - 1) / 2;
    i = j;
  }
  return total;
}

// Merge sort that returns the number of strict inversions.
std::int64_t sort_count_inversions(std::vector<double>& v, std::vector<double>& tmp,
                                   std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = sort_count_inversions(v, tmp, lo, mid) +
                     sort_count_inversions(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
            tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

Correlation kendall_tau(std::span<const std::optional<double>> scores,
                        std::span<const double> accs) {
  check_lengths(scores.size(), accs.size());
  const std::vector<double> x = lowered(scores);
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> xy(n);
  for (std::size_t i = 0; i < n; ++i) xy[i] = {x[i], accs[i]};
  std::sort(xy.begin(), xy.end());

  const std::int64_t n0 = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
  const std::int64_t n1 =
      tied_pairs(xy.begin(), xy.end(), [](auto& a, auto& b) { return a.first == b.first; });
  const std::int64_t n3 = tied_pairs(xy.begin(), xy.end(), [](auto& a, auto& b) { return a == b; });

  std::vector<double> y(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = xy[i].second;
  const std::int64_t discordant = sort_count_inversions(y, tmp, 0, n);
  const std::int64_t n2 = tied_pairs(y.begin(), y.end(), [](double a, double b) { return a == b; });

  const std::int64_t s = n0 - n1 - n2 + n3 - 2 * discordant;
  const std::int64_t dx = n0 - n1;
  const std::int64_t dy = n0 - n2;
  if (dx == 0 || dy == 0) return {0.0, true};
  const double tau = static_cast<double>(s) /
                     std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
  return {std::clamp(tau, -1.0, 1.0), false};
}

Correlation kendall_tau(std::span<const double> scores, std::span<const double> accs) {
  const Scores s = lift(scores);
  return kendall_tau(std::span<const std::optional<double>>(s), accs);
}

std::vector<double> midranks(std::span<const std::optional<double>> values) {
  const std::vector<double> x = lowered(values);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 share rank (i+1 + j) / 2.
    const double r = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = r;
    i = j;
  }
  return ranks;
}

Correlation spearman_rho(std::span<const std::optional<double>> scores,
                         std::span<const double> accs) {
  check_lengths(scores.size(), accs.size());
  const std::vector<double> rx = midranks(scores);
  const Scores acc_opt = lift(accs);
  const std::vector<double> ry = midranks(acc_opt);
  const double n = static_cast<double>(rx.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

Correlation spearman_rho(std::span<const double> scores, std::span<const double> accs) {
  const Scores s = lift(scores);
  return spearman_rho(std::span<const std::optional<double>>(s), accs);
}

double fitness_tau(std::span<const std::optional<double>> scores,
                   std::span<const double> accs) {
  const auto failures = std::count_if(scores.begin(), scores.end(),
                                      [](const auto& s) { return !s.has_value(); });
  if (2 * static_cast<std::size_t>(failures) > scores.size()) return -1.0;
  return kendall_tau(scores, accs).value;
}

std::vector<std::size_t> top_decile(std::span<const double> accs) {
  std::vector<std::size_t> order(accs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return accs[a] > accs[b]; });
  std::size_t keep = std::max<std::size_t>(2, (accs.size() + 9) / 10);
  keep = std::min(keep, accs.size());
  while (keep < accs.size() && accs[order[keep]] == accs[order[keep - 1]]) ++keep;
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace zcforge
