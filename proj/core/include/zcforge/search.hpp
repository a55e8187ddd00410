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

// Uses of a proxy program once it exists: architecture search guided by the
// proxy, the held-out test protocol, and score sweeps over the toy grid.

#ifndef ZCFORGE_SEARCH_HPP_
#define ZCFORGE_SEARCH_HPP_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zcforge/dataset.hpp"
#include "zcforge/evolve.hpp"
#include "zcforge/program.hpp"
#include "zcforge/scoring.hpp"
#include "zcforge/statsgen.hpp"

namespace zcforge {

// --- proxy scoring of fresh architectures -------------------------------------

struct ProxyOptions {
  std::size_t batch_size = 1;
  CaptureOptions capture;
  // Images for the data pass; standard-normal inputs when unset.
  std::optional<TaskSpec> task;
};

// Initializes `arch`, captures statistics on one batch and scores it. Empty
// on program failure.
std::optional<double> proxy_score(const ExprProgram& proxy, const ToyArch& arch,
                                  const ProxyOptions& options, Rng& rng);

// --- architecture search ------------------------------------------------------

using AccuracyFn = std::function<double(const ToyArch&)>;

struct ArchEval {
  ToyArch arch;
  std::optional<double> proxy;
  double accuracy = 0.0;  // reporting only, never used for selection
};

struct NasRunResult {
  std::size_t evaluations = 0;
  std::vector<double> best_accuracy;  // best true accuracy after each evaluation
  ToyArch best_arch;                  // highest proxy score seen
  std::vector<ArchEval> history;
};

struct AgingOptions {
  std::size_t budget = 200;
  std::size_t population = 20;
  std::size_t sample = 5;
  ProxyOptions proxy;
};

// Changes exactly one of: one block's channels, one block's kernel, or the
// depth by one (the kind is drawn uniformly among those the space allows).
ToyArch mutate_arch(const ToyArch& arch, const SpaceSpec& space, Rng& rng);

ToyArch random_arch(const SpaceSpec& space, Rng& rng);

// Aging evolution. Requires budget >= population >= 1 and sample >= 1
// (ConfigError otherwise).
NasRunResult aging_evolution(const ExprProgram& proxy, const SpaceSpec& space,
                             const AgingOptions& options, const AccuracyFn& accuracy,
                             Rng& rng);

// Uniform random architectures. With `proxy` null no statistics are
// computed and best_arch is the most accurate one.
NasRunResult random_search(const ExprProgram* proxy, const SpaceSpec& space,
                           std::size_t budget, const ProxyOptions& options,
                           const AccuracyFn& accuracy, Rng& rng);

// 1-based index of the first history entry satisfying `hit`, or nullopt.
std::optional<std::size_t> evaluations_until(const NasRunResult& run,
                                             const std::function<bool(const ToyArch&)>& hit);

// Every architecture in the grid. Throws ConfigError above `limit` points.
std::vector<ToyArch> enumerate_space(const SpaceSpec& space, std::size_t limit = 2000000);

// --- held-out testing ---------------------------------------------------------

struct ProgramReport {
  std::string name;
  ExprProgram program;
  std::map<std::string, Correlation> tau;  // per space
  std::map<std::string, Correlation> rho;
  Correlation tau_all;  // pooled over every test network
  Correlation rho_all;
  std::size_t failures = 0;
  std::size_t networks = 0;
};

// The fittest member of the final population followed by the two best
// hall-of-fame programs that differ from it.
std::vector<NamedProgram> select_test_programs(const std::vector<Individual>& final_population,
                                               const HallOfFame& hof);

// Throws OverlapError when a test id also appears in `evolution_ids`.
std::vector<ProgramReport> test_programs(const std::vector<NamedProgram>& programs,
                                         const std::vector<std::string>& evolution_ids,
                                         const TaskDataset& test, int threads = 0);

// --- analysis sweep -----------------------------------------------------------

struct AnalyzeGrid {
  BlockPattern pattern = BlockPattern::kRCB;
  std::vector<int> channels = {4, 8, 16};
  std::vector<int> kernels = {1, 3, 5};
  std::vector<int> depths = {2, 3, 4};
  std::vector<int> resolutions = {8};
  int in_channels = 3;
  int num_classes = 4;
  std::size_t batch_size = 1;
  CaptureOptions capture;
};

struct AnalyzePoint {
  int channels = 0;
  int kernel = 0;
  int depth = 0;
  int resolution = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  std::size_t repeats = 0;   // successful draws
  std::size_t failures = 0;
};

// For every grid point, `repeats` independent draws of a network with all
// blocks at (channels, kernel), fresh weights and standard-normal input.
// Draw r of point j uses stream (seed, j, r).
std::vector<AnalyzePoint> analyze_program(const ExprProgram& p, const AnalyzeGrid& grid,
                                          std::size_t repeats, std::uint64_t seed,
                                          int threads = 0);

enum class GridAxis : std::uint8_t { kChannels, kKernel, kDepth, kResolution };

// Median of point means for each value along `axis`, ascending by value.
std::vector<std::pair<int, double>> axis_medians(const std::vector<AnalyzePoint>& points,
                                                 GridAxis axis);

}  // namespace zcforge

#endif  // ZCFORGE_SEARCH_HPP_
