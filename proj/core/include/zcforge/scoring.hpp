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

#ifndef ZCFORGE_SCORING_HPP_
#define ZCFORGE_SCORING_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zcforge/dataset.hpp"
#include "zcforge/program.hpp"

namespace zcforge {

// `score` is empty when the program failed or produced a non-finite value
// on any block.
struct ScoreResult {
  std::string network_id;
  std::optional<double> score;
  std::vector<std::optional<double>> per_block;  // filled on request
};

ScoreResult score_network(const ExprProgram& p, const NetworkRecord& net,
                          bool keep_per_block = false);

// Scores with failures. Failed entries tie below every finite score.
using Scores = std::vector<std::optional<double>>;

struct Correlation {
  double value = 0.0;
  // Set when the statistic is undefined (a side is constant); value is 0.
  bool degenerate = false;
};

// Kendall tau-b in O(n log n). Requires equal lengths >= 2
// (std::invalid_argument otherwise).
Correlation kendall_tau(std::span<const std::optional<double>> scores,
                        std::span<const double> accs);
Correlation kendall_tau(std::span<const double> scores, std::span<const double> accs);

// Pearson correlation of midranks.
Correlation spearman_rho(std::span<const std::optional<double>> scores,
                         std::span<const double> accs);
Correlation spearman_rho(std::span<const double> scores, std::span<const double> accs);

// Midranks (1-based, ties averaged). Failures count as -inf.
std::vector<double> midranks(std::span<const std::optional<double>> values);

// Tau used as fitness on one space: -1 when more than half the scores failed.
double fitness_tau(std::span<const std::optional<double>> scores,
                   std::span<const double> accs);

// Indices of the top decile by accuracy (at least 2 entries), ties at the
// cut included.
std::vector<std::size_t> top_decile(std::span<const double> accs);

}  // namespace zcforge

#endif  // ZCFORGE_SCORING_HPP_
