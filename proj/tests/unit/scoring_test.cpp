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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracle/rank_oracle.hpp"
#include "test_util.hpp"
#include "zcforge/scoring.hpp"

namespace zcforge {
namespace {

using Opt = std::optional<double>;

NetworkRecord net(const char* arch, std::uint64_t seed) {
  return testing::record("n", "s", 0.5, testing::capture(arch, seed));
}

TEST(ScoreNetwork, NumelOfWeights) {
  // 2x3x1x1 and 2x2x1x1 weights: block scalars 6 and 4
  const auto r = score_network(parse_program("(numel T3)"),
                               net("RCB/r8/in3/cls4/2k1-2k1", 31));
  ASSERT_TRUE(r.score);
  EXPECT_EQ(*r.score, (6.0 + 4.0) / 2);
  const auto z = score_network(parse_program("(zeros_like T3G_N)"),
                               net("RCB/r8/in3/cls4/2k1-2k1", 31));
  EXPECT_EQ(z.score, Opt(0.0));
}

TEST(ScoreNetwork, SnipMatchesStraightLineComputation) {
  const NetworkRecord n = net("CBR/r8/in3/cls4/4k3-8k3-4k1", 32);
  double total = 0.0;
  for (const BlockStats& b : n.blocks) {
    const auto& w = b[StatSlot::kT3].data();
    const auto& g = b[StatSlot::kT3G_D].data();
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += std::fabs(static_cast<float>(w[i] * g[i]));
    total += static_cast<float>(s / static_cast<double>(w.size()));
  }
  const auto r = score_network(baseline_proxies()[1].program, n, true);
  ASSERT_TRUE(r.score);
  EXPECT_DOUBLE_EQ(*r.score, total / static_cast<double>(n.blocks.size()));
  EXPECT_EQ(r.per_block.size(), n.blocks.size());
}

TEST(ScoreNetwork, AnyFailingBlockFailsTheNetwork) {
  const auto r = score_network(parse_program("(invert (zeros_like T3))"),
                               net("RCB/r8/in3/cls4/4k3-4k3", 33), true);
  EXPECT_FALSE(r.score);
  ASSERT_EQ(r.per_block.size(), 2u);
  EXPECT_FALSE(r.per_block[0]);
}

TEST(Correlation, Examples) {
  const std::vector<double> up = {1, 2, 3, 4}, down = {4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(kendall_tau(up, up).value, 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(up, down).value, -1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(up, down).value, -1.0);
  // one swapped pair out of six
  EXPECT_NEAR(kendall_tau(std::vector<double>{1, 2, 4, 3}, up).value, 4.0 / 6.0, 1e-15);
  const std::vector<double> flat = {2, 2, 2, 2};
  const Correlation c = kendall_tau(flat, up);
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.value, 0.0);
  EXPECT_TRUE(spearman_rho(up, flat).degenerate);
  EXPECT_THROW(kendall_tau(std::vector<double>{1}, std::vector<double>{1}),
               std::invalid_argument);
  EXPECT_THROW(kendall_tau(up, std::vector<double>{1, 2}), std::invalid_argument);
}

std::vector<double> tied_vector(Rng& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> d(0, levels - 1);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng) * 0.5 - 1.0;
  return v;
}

TEST(Correlation, MatchesBruteForceWithTies) {
  Rng rng = make_rng(34, {});
  std::uniform_int_distribution<std::size_t> len(2, 50);
  int compared = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = len(rng);
    const auto x = tied_vector(rng, n, 1 + t % 9);
    const auto y = tied_vector(rng, n, 2 + t % 7);
    const double bt = oracle::brute_tau_b(x, y), br = oracle::brute_rho(x, y);
    const Correlation kt = kendall_tau(x, y), sr = spearman_rho(x, y);
    if (std::isnan(bt)) {
      EXPECT_TRUE(kt.degenerate);
      EXPECT_TRUE(sr.degenerate);
      continue;
    }
    ++compared;
    EXPECT_NEAR(kt.value, bt, 1e-12);
    EXPECT_NEAR(sr.value, br, 1e-12);
    EXPECT_GE(kt.value, -1.0);
    EXPECT_LE(kt.value, 1.0);
  }
  EXPECT_GT(compared, 80);
}

TEST(Correlation, InvariantUnderMonotoneTransformAndPermutation) {
  Rng rng = make_rng(35, {});
  for (int t = 0; t < 30; ++t) {
    const auto x = tied_vector(rng, 20, 6), y = tied_vector(rng, 20, 5);
    std::vector<double> fx(x.size());
    std::transform(x.begin(), x.end(), fx.begin(), [](double v) { return std::exp(3 * v); });
    EXPECT_EQ(kendall_tau(x, y).value, kendall_tau(fx, y).value);
    EXPECT_EQ(spearman_rho(x, y).value, spearman_rho(fx, y).value);
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> px, py;
    for (std::size_t i : perm) {
      px.push_back(x[i]);
      py.push_back(y[i]);
    }
    EXPECT_NEAR(kendall_tau(x, y).value, kendall_tau(px, py).value, 1e-15);
    EXPECT_NEAR(kendall_tau(x, y).value, kendall_tau(y, x).value, 1e-15);
  }
}

TEST(Failures, TieBelowEveryFiniteScore) {
  const std::vector<Opt> s = {Opt(), Opt(1.0), Opt(), Opt(2.0)};
  const auto r = midranks(s);
  EXPECT_EQ(r, (std::vector<double>{1.5, 3, 1.5, 4}));
  const std::vector<double> acc = {0.1, 0.5, 0.2, 0.9};
  const std::vector<double> lowered = {-1e300, 1.0, -1e300, 2.0};
  EXPECT_DOUBLE_EQ(kendall_tau(s, acc).value, oracle::brute_tau_b(lowered, acc));
  EXPECT_DOUBLE_EQ(fitness_tau(s, acc), kendall_tau(s, acc).value);
}

TEST(Failures, MajorityFailureGivesMinusOne) {
  const std::vector<Opt> s = {Opt(), Opt(1.0), Opt(), Opt()};
  const std::vector<double> acc = {0.1, 0.5, 0.2, 0.9};
  EXPECT_EQ(fitness_tau(s, acc), -1.0);
  const std::vector<Opt> all = {Opt(), Opt(), Opt()};
  EXPECT_EQ(fitness_tau(all, std::vector<double>{0.1, 0.2, 0.3}), -1.0);
}

TEST(TopDecile, SizeAndTies) {
  std::vector<double> acc(35);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = 0.01 * static_cast<double>(i);
  EXPECT_EQ(top_decile(acc), (std::vector<std::size_t>{31, 32, 33, 34}));
  EXPECT_EQ(top_decile(std::vector<double>{0.3, 0.9, 0.1}),
            (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(top_decile(std::vector<double>{0.9, 0.5, 0.9, 0.9}),
            (std::vector<std::size_t>{0, 2, 3}));
}

}  // namespace
}  // namespace zcforge
