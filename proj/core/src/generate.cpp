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

#include "zcforge/generate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "zcforge/parallel.hpp"
#include "zcforge/scoring.hpp"

namespace zcforge {

std::string_view label_mode_name(LabelMode m) {
  return m == LabelMode::kTrain ? "train" : "planted";
}

LabelMode label_mode_from_name(std::string_view name) {
  if (name == "train") return LabelMode::kTrain;
  if (name == "planted") return LabelMode::kPlanted;
  throw ConfigError("label_mode must be train or planted, got '" + std::string(name) + "'");
}

std::vector<NetworkRecord> generate_records(const std::vector<SpaceSpec>& spaces,
                                            const GenOptions& options, std::uint64_t seed,
                                            int threads) {
  if (options.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(options.capture.noise_scale >= 0.0)) throw ConfigError("noise_scale must be >= 0");
  struct Job {
    std::size_t space;
    std::size_t index;
    ToyArch arch;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    const SpaceSpec& spec = spaces[i];
    if (spec.resolution != options.task.resolution ||
        spec.in_channels != options.task.in_channels ||
        spec.num_classes != options.task.num_classes) {
      throw ConfigError("space '" + spec.name +
                        "' must match the task's resolution, input channels and classes");
    }
    Rng rng = make_rng(seed, {0x5eed, i});
    const std::vector<ToyArch> archs = sample_space(spec, options.nets_per_space, rng);
    for (std::size_t j = 0; j < archs.size(); ++j) jobs.push_back({i, j, archs[j]});
  }
  std::optional<SyntheticTask> task;
  if (options.label_mode == LabelMode::kTrain) task = make_task(options.task, seed);

  std::vector<NetworkRecord> records(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t t) {
        const Job& job = jobs[t];
        Rng rng = make_rng(seed, {job.space + 1, job.index});
        NetworkRecord& r = records[t];
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "-%04zu", job.index);
        r.id = options.id_prefix + spaces[job.space].name + suffix;
        r.space = spaces[job.space].name;
        r.dataset_name = options.dataset_name;
        r.meta = {job.arch.param_count(), job.arch.flops(), job.arch.describe()};
        const NetworkParams<float> params = init_params(job.arch, rng);
        const Batch<float> batch = sample_task_batch(options.task, options.batch_size, rng);
        r.blocks = capture_stats(job.arch, params, batch, rng, options.capture);
        if (task) {
          r.accuracy = train_and_label(job.arch, params, *task, options.train, rng).accuracy;
        }
      },
      threads);

  if (options.label_mode == LabelMode::kPlanted) {
    plant_labels(records, parse_program(options.planted_program));
  }
  if (options.shuffle_labels) {
    Rng rng = make_rng(seed, {0x5abf1e});
    shuffle_labels(records, rng);
  }
  return records;
}

void plant_labels(std::vector<NetworkRecord>& records, const ExprProgram& program) {
  std::vector<double> scores;
  for (const auto& r : records) {
    const auto s = score_network(program, r).score;
    if (!s) throw NumericalFailure("planted program fails on record " + r.id);
    scores.push_back(*s);
  }
  std::vector<double> mags;
  for (double s : scores) mags.push_back(std::abs(s));
  std::sort(mags.begin(), mags.end());
  double scale = mags.empty() ? 1.0 : mags[mags.size() / 2];
  if (!(scale > 0.0)) scale = 1.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].accuracy = 0.5 + 0.5 * std::tanh(scores[i] / scale);
  }
}

void shuffle_labels(std::vector<NetworkRecord>& records, Rng& rng) {
  for (std::size_t i = records.size(); i > 1; --i) {
    std::swap(records[i - 1].accuracy, records[uniform_index(rng, i)].accuracy);
  }
}

}  // namespace zcforge
