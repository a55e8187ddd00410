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

#include "zcforge/search.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

#include "zcforge/parallel.hpp"

namespace zcforge {

namespace {

Batch<float> normal_batch(int in_channels, int resolution, int num_classes,
                          std::size_t size, Rng& rng) {
  Batch<float> b;
  b.size = size;
  b.images.resize(size * static_cast<std::size_t>(in_channels * resolution * resolution));
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& x : b.images) x = normal(rng);
  for (std::size_t i = 0; i < size; ++i) {
    b.labels.push_back(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(num_classes))));
  }
  return b;
}

std::optional<double> score_blocks(const ExprProgram& p, std::vector<BlockStats> blocks) {
  NetworkRecord r;
  r.blocks = std::move(blocks);
  return score_network(p, r).score;
}

bool proxy_better(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a) return false;
  if (!b) return true;
  return *a > *b;
}

double median_sorted(const std::vector<double>& v) {
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::optional<double> proxy_score(const ExprProgram& proxy, const ToyArch& arch,
                                  const ProxyOptions& options, Rng& rng) {
  const NetworkParams<float> params = init_params(arch, rng);
  const Batch<float> batch =
      options.task ? sample_task_batch(*options.task, options.batch_size, rng)
                   : normal_batch(arch.in_channels, arch.resolution, arch.num_classes,
                                  options.batch_size, rng);
  return score_blocks(proxy, capture_stats(arch, params, batch, rng, options.capture));
}

ToyArch random_arch(const SpaceSpec& space, Rng& rng) {
  return sample_space(space, 1, rng).front();
}

ToyArch mutate_arch(const ToyArch& arch, const SpaceSpec& space, Rng& rng) {
  enum Kind { kChannel, kKernel, kDepth };
  std::vector<Kind> kinds;
  if (space.channels.size() > 1) kinds.push_back(kChannel);
  if (space.kernels.size() > 1) kinds.push_back(kKernel);
  if (space.min_depth < space.max_depth) kinds.push_back(kDepth);
  if (kinds.empty()) return arch;
  ToyArch out = arch;
  auto other = [&](const std::vector<int>& choices, int current) {
    std::vector<int> rest;
    for (int c : choices) {
      if (c != current) rest.push_back(c);
    }
    return rest[uniform_index(rng, rest.size())];
  };
  const Kind kind = kinds[uniform_index(rng, kinds.size())];
  const std::size_t depth = out.depth();
  if (kind == kDepth) {
    bool grow;
    if (static_cast<int>(depth) <= space.min_depth) {
      grow = true;
    } else if (static_cast<int>(depth) >= space.max_depth) {
      grow = false;
    } else {
      grow = uniform_index(rng, 2) == 1;
    }
    if (!grow) {
      out.channels.pop_back();
      out.kernels.pop_back();
    } else if (space.shared_block_config) {
      out.channels.push_back(out.channels.front());
      out.kernels.push_back(out.kernels.front());
    } else {
      out.channels.push_back(space.channels[uniform_index(rng, space.channels.size())]);
      out.kernels.push_back(space.kernels[uniform_index(rng, space.kernels.size())]);
    }
    return out;
  }
  std::vector<int>& field = kind == kChannel ? out.channels : out.kernels;
  const std::vector<int>& choices = kind == kChannel ? space.channels : space.kernels;
  if (space.shared_block_config) {
    const int v = other(choices, field.front());
    std::fill(field.begin(), field.end(), v);
  } else {
    const std::size_t b = uniform_index(rng, depth);
    field[b] = other(choices, field[b]);
  }
  return out;
}

namespace {

void record(NasRunResult& run, ToyArch arch, std::optional<double> proxy, double acc) {
  const double prev = run.best_accuracy.empty() ? -std::numeric_limits<double>::infinity()
                                                : run.best_accuracy.back();
  run.best_accuracy.push_back(std::max(prev, acc));
  run.history.push_back({std::move(arch), proxy, acc});
  ++run.evaluations;
}

void finish(NasRunResult& run, bool by_proxy) {
  if (run.history.empty()) return;
  const ArchEval* best = &run.history.front();
  for (const ArchEval& e : run.history) {
    if (by_proxy ? proxy_better(e.proxy, best->proxy) : e.accuracy > best->accuracy) {
      best = &e;
    }
  }
  run.best_arch = best->arch;
}

}  // namespace

NasRunResult aging_evolution(const ExprProgram& proxy, const SpaceSpec& space,
                             const AgingOptions& options, const AccuracyFn& accuracy,
                             Rng& rng) {
  validate_space(space);
  if (options.population < 1 || options.sample < 1 || options.budget < options.population) {
    throw ConfigError("aging evolution needs budget >= population >= 1 and sample >= 1");
  }
  NasRunResult run;
  std::deque<std::pair<ToyArch, std::optional<double>>> population;
  std::vector<std::size_t> idx;
  while (run.evaluations < options.budget) {
    ToyArch arch;
    if (run.evaluations < options.population) {
      arch = random_arch(space, rng);
    } else {
      idx.resize(population.size());
      std::iota(idx.begin(), idx.end(), 0);
      const std::size_t draws = std::min(options.sample, idx.size());
      std::size_t parent = 0;
      for (std::size_t t = 0; t < draws; ++t) {
        std::swap(idx[t], idx[t + uniform_index(rng, idx.size() - t)]);
        if (t == 0 || proxy_better(population[idx[t]].second, population[parent].second)) {
          parent = idx[t];
        }
      }
      arch = mutate_arch(population[parent].first, space, rng);
    }
    const std::optional<double> s = proxy_score(proxy, arch, options.proxy, rng);
    population.emplace_back(arch, s);
    if (population.size() > options.population) population.pop_front();
    record(run, std::move(arch), s, accuracy(population.back().first));
  }
  finish(run, true);
  return run;
}

NasRunResult random_search(const ExprProgram* proxy, const SpaceSpec& space,
                           std::size_t budget, const ProxyOptions& options,
                           const AccuracyFn& accuracy, Rng& rng) {
  validate_space(space);
  NasRunResult run;
  for (std::size_t n = 0; n < budget; ++n) {
    ToyArch arch = random_arch(space, rng);
    std::optional<double> s;
    if (proxy) s = proxy_score(*proxy, arch, options, rng);
    const double acc = accuracy(arch);
    record(run, std::move(arch), s, acc);
  }
  finish(run, proxy != nullptr);
  return run;
}

std::optional<std::size_t> evaluations_until(const NasRunResult& run,
                                             const std::function<bool(const ToyArch&)>& hit) {
  for (std::size_t i = 0; i < run.history.size(); ++i) {
    if (hit(run.history[i].arch)) return i + 1;
  }
  return std::nullopt;
}

std::vector<ToyArch> enumerate_space(const SpaceSpec& space, std::size_t limit) {
  validate_space(space);
  const std::uint64_t n = grid_size(space);
  if (n > limit) {
    throw ConfigError("space '" + space.name + "' has more than " + std::to_string(limit) +
                      " architectures");
  }
  std::vector<ToyArch> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(decode_arch(space, i));
  return out;
}

// --- held-out testing ---------------------------------------------------------

std::vector<NamedProgram> select_test_programs(const std::vector<Individual>& final_population,
                                               const HallOfFame& hof) {
  std::vector<NamedProgram> out;
  const Individual* best = nullptr;
  for (const Individual& ind : final_population) {
    if (ind.fitness && (!best || *ind.fitness > *best->fitness)) best = &ind;
  }
  if (best) out.push_back({"final", best->program});
  int taken = 0;
  for (const Individual& e : hof.entries()) {
    if (taken == 2) break;
    if (best && e.program == best->program) continue;
    out.push_back({"hof" + std::to_string(++taken), e.program});
  }
  return out;
}

std::vector<ProgramReport> test_programs(const std::vector<NamedProgram>& programs,
                                         const std::vector<std::string>& evolution_ids,
                                         const TaskDataset& test, int threads) {
  const std::set<std::string> seen(evolution_ids.begin(), evolution_ids.end());
  for (const std::string& id : test.ids()) {
    if (seen.count(id)) {
      throw OverlapError("network '" + id + "' is in both the evolution and the test data");
    }
  }
  std::vector<const NetworkRecord*> flat;
  for (const auto& [_, records] : test.spaces) {
    for (const auto& r : records) flat.push_back(&r);
  }
  std::vector<ProgramReport> out;
  for (const NamedProgram& np : programs) {
    Scores scores(flat.size());
    parallel_for(
        flat.size(), [&](std::size_t i) { scores[i] = score_network(np.program, *flat[i]).score; },
        threads);
    ProgramReport rep{np.name, np.program, {}, {}, {}, {}, 0, flat.size()};
    std::vector<double> accs(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
      accs[i] = flat[i]->accuracy;
      if (!scores[i]) ++rep.failures;
    }
    std::size_t begin = 0;
    for (const auto& [space, records] : test.spaces) {
      const std::size_t end = begin + records.size();
      if (records.size() >= 2) {
        const std::span<const std::optional<double>> s(scores.data() + begin, records.size());
        const std::span<const double> a(accs.data() + begin, records.size());
        rep.tau[space] = kendall_tau(s, a);
        rep.rho[space] = spearman_rho(s, a);
      }
      begin = end;
    }
    if (flat.size() >= 2) {
      rep.tau_all = kendall_tau(scores, accs);
      rep.rho_all = spearman_rho(scores, accs);
    }
    out.push_back(std::move(rep));
  }
  return out;
}

// --- analysis sweep -----------------------------------------------------------

std::vector<AnalyzePoint> analyze_program(const ExprProgram& p, const AnalyzeGrid& grid,
                                          std::size_t repeats, std::uint64_t seed,
                                          int threads) {
  if (repeats == 0) throw ConfigError("repeats must be >= 1");
  std::vector<AnalyzePoint> points;
  std::vector<ToyArch> archs;
  for (int d : grid.depths) {
    for (int c : grid.channels) {
      for (int k : grid.kernels) {
        for (int res : grid.resolutions) {
          ToyArch a;
          a.pattern = grid.pattern;
          a.in_channels = grid.in_channels;
          a.num_classes = grid.num_classes;
          a.resolution = res;
          a.channels.assign(static_cast<std::size_t>(d), c);
          a.kernels.assign(static_cast<std::size_t>(d), k);
          try {
            validate_arch(a);
          } catch (const ShapeMismatch& e) {
            throw ConfigError(std::string("analysis grid: ") + e.what());
          }
          archs.push_back(a);
          points.push_back({c, k, d, res, 0, 0, 0, 0, 0});
        }
      }
    }
  }
  std::vector<std::optional<double>> draws(archs.size() * repeats);
  parallel_for(
      draws.size(),
      [&](std::size_t t) {
        const std::size_t j = t / repeats;
        const std::size_t r = t % repeats;
        Rng rng = make_rng(seed, {j, r});
        const ToyArch& a = archs[j];
        const NetworkParams<float> params = init_params(a, rng);
        const Batch<float> batch =
            normal_batch(a.in_channels, a.resolution, a.num_classes, grid.batch_size, rng);
        draws[t] = score_blocks(p, capture_stats(a, params, batch, rng, grid.capture));
      },
      threads);
  for (std::size_t j = 0; j < points.size(); ++j) {
    std::vector<double> ok;
    for (std::size_t r = 0; r < repeats; ++r) {
      if (const auto& v = draws[j * repeats + r]) ok.push_back(*v);
    }
    AnalyzePoint& pt = points[j];
    pt.repeats = ok.size();
    pt.failures = repeats - ok.size();
    if (ok.empty()) {
      pt.mean = pt.stddev = pt.median = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    pt.mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
    double ss = 0.0;
    for (double v : ok) ss += (v - pt.mean) * (v - pt.mean);
    pt.stddev = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
    std::sort(ok.begin(), ok.end());
    pt.median = median_sorted(ok);
  }
  return points;
}

std::vector<std::pair<int, double>> axis_medians(const std::vector<AnalyzePoint>& points,
                                                 GridAxis axis) {
  std::map<int, std::vector<double>> groups;
  for (const AnalyzePoint& p : points) {
    const int key = axis == GridAxis::kChannels ? p.channels
                    : axis == GridAxis::kKernel ? p.kernel
                    : axis == GridAxis::kDepth  ? p.depth
                                                : p.resolution;
    if (!std::isnan(p.mean)) groups[key].push_back(p.mean);
  }
  std::vector<std::pair<int, double>> out;
  for (auto& [key, v] : groups) {
    std::sort(v.begin(), v.end());
    out.emplace_back(key, median_sorted(v));
  }
  return out;
}

}  // namespace zcforge
