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

// Evolutionary search over proxy programs.
//
// Generation 0 evaluates the initial random population. Every later
// generation builds floor(n/2) offspring with VarOr (tournament-selected
// parents; crossover, mutation or reproduction), tops them up to n with fresh
// random programs, evaluates all of them on a newly drawn fitness batch and
// replaces the population. Fitness is the minimum Kendall tau over the
// sampled spaces.
//
// Random streams are derived from (seed, purpose, generation, index), so the
// thread count never changes results.

#ifndef ZCFORGE_EVOLVE_HPP_
#define ZCFORGE_EVOLVE_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zcforge/dataset.hpp"
#include "zcforge/program.hpp"

namespace zcforge {

enum class SelectionMode : std::uint8_t { kOffspringPlusFresh, kMuCommaLambda };

std::string_view selection_mode_name(SelectionMode m);
SelectionMode selection_mode_from_name(std::string_view name);  // ConfigError

struct EvolutionConfig {
  std::size_t population_size = 50;
  int generations = 15;
  std::size_t tournament_size = 4;
  double crossover_prob = 0.4;
  double mutation_prob = 0.4;
  std::size_t spaces_per_eval = 4;  // s
  std::size_t nets_per_space = 20;  // k
  int min_depth = kMinTreeDepth;
  int max_depth = kMaxTreeDepth;
  std::uint64_t seed = 0;
  SelectionMode selection_mode = SelectionMode::kOffspringPlusFresh;
  std::size_t mu = 25;
  std::size_t lambda = 50;
  std::size_t hall_of_fame_size = 3;
  std::size_t init_budget = 10000;       // draws per individual
  std::size_t variation_budget = 10000;  // draws per offspring
  ToScalar to_scalar = ToScalar::kMean;
  int threads = 0;  // 0: default_thread_count()
};

// Throws ConfigError.
void validate_config(const EvolutionConfig& cfg);

struct Individual {
  ExprProgram program;
  std::optional<double> fitness;
  std::map<std::string, double> per_space_tau;
};

// Best-ever distinct programs ordered by fitness (descending); among equal
// fitness the earlier entrant ranks first.
class HallOfFame {
 public:
  explicit HallOfFame(std::size_t capacity = 3);

  void update(const std::vector<Individual>& population);
  const std::vector<Individual>& entries() const { return entries_; }
  std::size_t capacity() const { return capacity_; }
  std::optional<double> best_fitness() const;

 private:
  std::size_t capacity_;
  std::vector<Individual> entries_;
};

// Per-individual evaluation on one fitness batch.
Individual evaluate_individual(ExprProgram program,
                               const std::vector<SpaceSample>& batch);

// n valid random programs. Individual i draws from its own stream; after
// cfg.init_budget rejected draws InitExhausted is thrown.
std::vector<ExprProgram> init_population(const EvolutionConfig& cfg,
                                         std::span<const BlockStats> probe,
                                         std::size_t n, std::uint64_t stream);

enum class VariationBranch : std::uint8_t { kCrossover, kMutation, kReproduction };

VariationBranch draw_variation_branch(const EvolutionConfig& cfg, Rng& rng);

// Tournament (with replacement) over evaluated individuals; unset fitness
// loses to any set fitness.
const Individual& tournament_select(const std::vector<Individual>& population,
                                    std::size_t size, Rng& rng);

// `count` valid offspring. Offspring i uses stream (seed, stream, i); an
// invalid child redraws the branch. VariationExhausted after
// cfg.variation_budget draws for one offspring.
std::vector<ExprProgram> var_or(const std::vector<Individual>& population,
                                const EvolutionConfig& cfg,
                                std::span<const BlockStats> probe, std::size_t count,
                                std::uint64_t stream,
                                std::vector<VariationBranch>* branches = nullptr);

struct GenerationLog {
  int generation = 0;
  std::vector<std::string> spaces;
  double best_fitness = 0.0;
  double median_fitness = 0.0;
  std::size_t evaluations = 0;  // program x network evaluations
  double wall_seconds = 0.0;
  std::vector<Individual> individuals;  // everything evaluated this generation
};

struct EvolutionState {
  int next_generation = 0;
  std::vector<Individual> population;
  HallOfFame hall_of_fame;
};

struct EvolutionResult {
  std::vector<Individual> population;
  HallOfFame hall_of_fame;
  std::vector<GenerationLog> log;
};

// Called after each generation with the log entry and the state needed to
// resume.
using GenerationCallback =
    std::function<void(const GenerationLog&, const EvolutionState&)>;

// Runs generations resume->next_generation .. cfg.generations. The probe set
// must be non-empty.
EvolutionResult run_evolution(const EvolutionConfig& cfg, const TaskDataset& td,
                              std::span<const BlockStats> probe,
                              const GenerationCallback& on_generation = {},
                              std::optional<EvolutionState> resume = std::nullopt);

// Blocks of the first `per_space` records of every space, in space order.
std::vector<BlockStats> make_probe(const TaskDataset& td, std::size_t per_space);

}  // namespace zcforge

#endif  // ZCFORGE_EVOLVE_HPP_
