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

#include <random>

#include <benchmark/benchmark.h>

#include "zcforge/config.hpp"
#include "zcforge/evolve.hpp"
#include "zcforge/generate.hpp"
#include "zcforge/scoring.hpp"
#include "zcforge/statsgen.hpp"

namespace zcforge {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng = make_rng(seed, {});
  std::normal_distribution<float> n;
  std::vector<float> d(shape_numel(shape));
  for (float& v : d) v = n(rng);
  return Tensor(std::move(shape), std::move(d));
}

void BM_EltwiseMul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(eval_primitive(Op::kEltwiseMul, a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_EltwiseMul)->Arg(16)->Arg(64)->Arg(256);

void BM_SymEigRatio(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, 4, 3, 3}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(eval_primitive(Op::kSymEigRatio, a));
}
BENCHMARK(BM_SymEigRatio)->Arg(8)->Arg(32);

void BM_CaptureStats(benchmark::State& state) {
  const ToyArch arch = parse_arch(state.range(0) ? "CBR/r8/in3/cls4/16k3-16k3-16k3-16k3"
                                                 : "RCB/r8/in3/cls4/4k3-8k3");
  Rng rng = make_rng(4, {});
  const auto params = init_params(arch, rng);
  const auto batch = sample_task_batch(TaskSpec{}, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(capture_stats(arch, params, batch, rng));
}
BENCHMARK(BM_CaptureStats)->Arg(0)->Arg(1);

void BM_KendallTau(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(5, {});
  std::uniform_int_distribution<int> d(0, 50);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = d(rng);
    y[i] = d(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(x, y));
}
BENCHMARK(BM_KendallTau)->Arg(20)->Arg(1000)->Arg(100000);

const TaskDataset& planted() {
  static const TaskDataset td = [] {
    GenOptions g;
    g.nets_per_space = 20;
    g.label_mode = LabelMode::kPlanted;
    return make_task_dataset(generate_records(default_spaces(), g, 6, 1));
  }();
  return td;
}

void BM_ScoreNetwork(benchmark::State& state) {
  const ExprProgram p = baseline_proxies()[0].program;
  const NetworkRecord& r = planted().spaces.begin()->second.front();
  for (auto _ : state) benchmark::DoNotOptimize(score_network(p, r));
}
BENCHMARK(BM_ScoreNetwork);

void BM_EvolutionGeneration(benchmark::State& state) {
  EvolutionConfig c;
  c.population_size = 20;
  c.generations = 1;
  c.threads = 1;
  const auto probe = make_probe(planted(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_evolution(c, planted(), probe));
}
BENCHMARK(BM_EvolutionGeneration)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace zcforge

BENCHMARK_MAIN();
