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

#include "zcforge/evolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "zcforge/parallel.hpp"
#include "zcforge/scoring.hpp"

namespace zcforge {

namespace {

// Stream purposes; combined with the generation index into one path element.
enum : std::uint64_t { kInitStream = 1, kVarStream = 2, kFreshStream = 3, kBatchStream = 4 };

std::uint64_t stream_id(std::uint64_t purpose, int generation) {
  return purpose << 32 | static_cast<std::uint32_t>(generation);
}

bool better(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a) return false;
  if (!b) return true;
  return *a > *b;
}

}  // namespace

std::string_view selection_mode_name(SelectionMode m) {
  return m == SelectionMode::kOffspringPlusFresh ? "offspring_plus_fresh" : "mu_comma_lambda";
}

SelectionMode selection_mode_from_name(std::string_view name) {
  if (name == "offspring_plus_fresh") return SelectionMode::kOffspringPlusFresh;
  if (name == "mu_comma_lambda") return SelectionMode::kMuCommaLambda;
  throw ConfigError("selection_mode must be offspring_plus_fresh or mu_comma_lambda, got '" +
                    std::string(name) + "'");
}

void validate_config(const EvolutionConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(cfg.population_size >= 2, "population_size must be >= 2");
  require(cfg.generations >= 0, "generations must be >= 0");
  require(cfg.tournament_size >= 1, "tournament_size must be >= 1");
  require(cfg.crossover_prob >= 0 && cfg.mutation_prob >= 0 &&
              cfg.crossover_prob + cfg.mutation_prob <= 1.0 + 1e-12,
          "crossover_prob and mutation_prob must be >= 0 and sum to <= 1");
  require(cfg.spaces_per_eval >= 1, "spaces_per_eval must be >= 1");
  require(cfg.nets_per_space >= 2, "nets_per_space must be >= 2");
  require(cfg.min_depth >= kMinTreeDepth && cfg.max_depth <= kMaxTreeDepth &&
              cfg.min_depth <= cfg.max_depth,
          "tree depths must satisfy 2 <= min_depth <= max_depth <= 10");
  require(cfg.hall_of_fame_size >= 3, "hall_of_fame_size must be >= 3");
  require(cfg.init_budget >= 1 && cfg.variation_budget >= 1, "redraw budgets must be >= 1");
  if (cfg.selection_mode == SelectionMode::kMuCommaLambda) {
    require(cfg.mu >= 2 && cfg.lambda >= cfg.mu, "mu_comma_lambda needs 2 <= mu <= lambda");
  }
}

// --- hall of fame -------------------------------------------------------------

HallOfFame::HallOfFame(std::size_t capacity) : capacity_(capacity) {}

void HallOfFame::update(const std::vector<Individual>& population) {
  for (const Individual& ind : population) {
    if (!ind.fitness) continue;
    auto same = std::find_if(entries_.begin(), entries_.end(), [&](const Individual& e) {
      return e.program == ind.program;
    });
    if (same != entries_.end()) {
      if (*ind.fitness > *same->fitness) {
        same->fitness = ind.fitness;
        same->per_space_tau = ind.per_space_tau;
      }
    } else {
      entries_.push_back(ind);
    }
    // Stable: equal fitness keeps entry order.
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const Individual& a, const Individual& b) {
                       return *a.fitness > *b.fitness;
                     });
    if (entries_.size() > capacity_) {
      entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(capacity_), entries_.end());
    }
  }
}

std::optional<double> HallOfFame::best_fitness() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.front().fitness;
}

// --- evaluation ---------------------------------------------------------------

Individual evaluate_individual(ExprProgram program, const std::vector<SpaceSample>& batch) {
  Individual ind{std::move(program), std::nullopt, {}};
  double fitness = std::numeric_limits<double>::infinity();
  for (const SpaceSample& sample : batch) {
    Scores scores;
    std::vector<double> accs;
    scores.reserve(sample.records.size());
    for (const NetworkRecord* r : sample.records) {
      scores.push_back(score_network(ind.program, *r).score);
      accs.push_back(r->accuracy);
    }
    const double tau = fitness_tau(scores, accs);
    ind.per_space_tau[sample.space] = tau;
    fitness = std::min(fitness, tau);
  }
  if (!batch.empty()) ind.fitness = fitness;
  return ind;
}

std::vector<ExprProgram> init_population(const EvolutionConfig& cfg,
                                         std::span<const BlockStats> probe,
                                         std::size_t n, std::uint64_t stream) {
  std::vector<std::optional<ExprProgram>> slots(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        Rng rng = make_rng(cfg.seed, {stream, i});
        for (std::size_t draw = 0; draw < cfg.init_budget; ++draw) {
          ExprProgram p = random_tree(rng, cfg.min_depth, cfg.max_depth, cfg.to_scalar);
          if (check_validity(p, probe)) {
            slots[i] = std::move(p);
            return;
          }
        }
        throw InitExhausted("no valid program after " + std::to_string(cfg.init_budget) +
                            " random draws; the probe set rejects everything");
      },
      cfg.threads);
  std::vector<ExprProgram> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

VariationBranch draw_variation_branch(const EvolutionConfig& cfg, Rng& rng) {
  const double u = uniform01(rng);
  if (u < cfg.crossover_prob) return VariationBranch::kCrossover;
  if (u < cfg.crossover_prob + cfg.mutation_prob) return VariationBranch::kMutation;
  return VariationBranch::kReproduction;
}

const Individual& tournament_select(const std::vector<Individual>& population,
                                    std::size_t size, Rng& rng) {
  const Individual* best = &population[uniform_index(rng, population.size())];
  for (std::size_t t = 1; t < size; ++t) {
    const Individual& c = population[uniform_index(rng, population.size())];
    if (better(c.fitness, best->fitness)) best = &c;
  }
  return *best;
}

std::vector<ExprProgram> var_or(const std::vector<Individual>& population,
                                const EvolutionConfig& cfg,
                                std::span<const BlockStats> probe, std::size_t count,
                                std::uint64_t stream,
                                std::vector<VariationBranch>* branches) {
  if (population.empty()) throw std::invalid_argument("var_or on an empty population");
  std::vector<std::optional<ExprProgram>> slots(count);
  std::vector<VariationBranch> taken(count);
  parallel_for(
      count,
      [&](std::size_t i) {
        Rng rng = make_rng(cfg.seed, {stream, i});
        for (std::size_t draw = 0; draw < cfg.variation_budget; ++draw) {
          const VariationBranch branch = draw_variation_branch(cfg, rng);
          std::optional<ExprProgram> child;
          switch (branch) {
            case VariationBranch::kCrossover: {
              const Individual& a = tournament_select(population, cfg.tournament_size, rng);
              const Individual& b = tournament_select(population, cfg.tournament_size, rng);
              child = crossover(a.program, b.program, rng);
              break;
            }
            case VariationBranch::kMutation:
              child = mutate(tournament_select(population, cfg.tournament_size, rng).program,
                             rng);
              break;
            case VariationBranch::kReproduction:
              child = tournament_select(population, cfg.tournament_size, rng).program;
              break;
          }
          if (check_validity(*child, probe)) {
            slots[i] = std::move(child);
            taken[i] = branch;
            return;
          }
        }
        throw VariationExhausted("no valid offspring after " +
                                 std::to_string(cfg.variation_budget) + " variation draws");
      },
      cfg.threads);
  if (branches) *branches = taken;
  std::vector<ExprProgram> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// --- main loop ----------------------------------------------------------------

namespace {

std::vector<Individual> evaluate_all(std::vector<ExprProgram> programs,
                                     const std::vector<SpaceSample>& batch, int threads) {
  std::vector<Individual> out(programs.size(),
                              Individual{ExprProgram({Node::slot(StatSlot::kT3)}), {}, {}});
  parallel_for(
      programs.size(),
      [&](std::size_t i) { out[i] = evaluate_individual(std::move(programs[i]), batch); },
      threads);
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

EvolutionResult run_evolution(const EvolutionConfig& cfg, const TaskDataset& td,
                              std::span<const BlockStats> probe,
                              const GenerationCallback& on_generation,
                              std::optional<EvolutionState> resume) {
  validate_config(cfg);
  if (probe.empty()) throw InitExhausted("empty probe set: no program can be valid");
  // Fail early on a dataset that cannot supply a fitness batch.
  {
    Rng check(0);
    sample_fitness_batch(td, cfg.spaces_per_eval, cfg.nets_per_space, check);
  }
  const bool plus_fresh = cfg.selection_mode == SelectionMode::kOffspringPlusFresh;
  EvolutionState state = resume ? std::move(*resume)
                                : EvolutionState{0, {}, HallOfFame(cfg.hall_of_fame_size)};
  EvolutionResult result{{}, HallOfFame(cfg.hall_of_fame_size), {}};

  for (int g = state.next_generation; g <= cfg.generations; ++g) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ExprProgram> programs;
    if (g == 0) {
      programs = init_population(cfg, probe, plus_fresh ? cfg.population_size : cfg.mu,
                                 stream_id(kInitStream, 0));
    } else if (plus_fresh) {
      const std::size_t n = cfg.population_size;
      programs = var_or(state.population, cfg, probe, n / 2, stream_id(kVarStream, g));
      std::vector<ExprProgram> fresh =
          init_population(cfg, probe, n - n / 2, stream_id(kFreshStream, g));
      for (auto& p : fresh) programs.push_back(std::move(p));
    } else {
      programs = var_or(state.population, cfg, probe, cfg.lambda, stream_id(kVarStream, g));
    }

    Rng batch_rng = make_rng(cfg.seed, {stream_id(kBatchStream, g)});
    const std::vector<SpaceSample> batch =
        sample_fitness_batch(td, cfg.spaces_per_eval, cfg.nets_per_space, batch_rng);
    std::vector<Individual> evaluated = evaluate_all(std::move(programs), batch, cfg.threads);

    // Every evaluated program passed the probe; re-assert it.
    for (const Individual& ind : evaluated) {
      if (!check_validity(ind.program, probe)) {
        throw std::logic_error("an evaluated individual fails the probe set");
      }
    }

    GenerationLog entry;
    entry.generation = g;
    for (const auto& s : batch) entry.spaces.push_back(s.space);
    std::vector<double> fits;
    for (const auto& ind : evaluated) fits.push_back(*ind.fitness);
    entry.best_fitness = *std::max_element(fits.begin(), fits.end());
    entry.median_fitness = median_of(fits);
    std::size_t nets = 0;
    for (const auto& s : batch) nets += s.records.size();
    entry.evaluations = evaluated.size() * nets;
    const std::size_t expected =
        (plus_fresh ? cfg.population_size : (g == 0 ? cfg.mu : cfg.lambda)) *
        cfg.spaces_per_eval * cfg.nets_per_space;
    if (entry.evaluations != expected) {
      throw std::logic_error("generation evaluation count mismatch");
    }
    entry.individuals = evaluated;

    state.hall_of_fame.update(evaluated);
    if (plus_fresh || g == 0) {
      state.population = std::move(evaluated);
    } else {
      std::stable_sort(evaluated.begin(), evaluated.end(),
                       [](const Individual& a, const Individual& b) {
                         return *a.fitness > *b.fitness;
                       });
      evaluated.erase(evaluated.begin() + static_cast<std::ptrdiff_t>(cfg.mu), evaluated.end());
      state.population = std::move(evaluated);
    }
    state.next_generation = g + 1;
    entry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_generation) on_generation(entry, state);
    result.log.push_back(std::move(entry));
  }
  result.population = std::move(state.population);
  result.hall_of_fame = std::move(state.hall_of_fame);
  return result;
}

std::vector<BlockStats> make_probe(const TaskDataset& td, std::size_t per_space) {
  std::vector<BlockStats> probe;
  for (const auto& [_, records] : td.spaces) {
    for (std::size_t i = 0; i < std::min(per_space, records.size()); ++i) {
      probe.insert(probe.end(), records[i].blocks.begin(), records[i].blocks.end());
    }
  }
  return probe;
}

}  // namespace zcforge
