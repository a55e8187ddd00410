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

// Builds labelled statistics datasets from toy design spaces.

#ifndef ZCFORGE_GENERATE_HPP_
#define ZCFORGE_GENERATE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "zcforge/dataset.hpp"
#include "zcforge/program.hpp"
#include "zcforge/statsgen.hpp"

namespace zcforge {

enum class LabelMode : std::uint8_t {
  kTrain,    // brief SGD training, held-out accuracy
  kPlanted,  // monotone function of a fixed program's score
};

std::string_view label_mode_name(LabelMode m);
LabelMode label_mode_from_name(std::string_view name);  // ConfigError

struct GenOptions {
  std::size_t nets_per_space = 80;
  std::size_t batch_size = 1;
  CaptureOptions capture;
  TaskSpec task;
  TrainOptions train;
  LabelMode label_mode = LabelMode::kTrain;
  std::string planted_program = "(l1_mean T3G_N)";
  bool shuffle_labels = false;
  std::string dataset_name = "gratings";
  std::string id_prefix;
};

// Records for every space, ids "<prefix><space>-<index>". Network j of space
// i derives all randomness from (seed, i, j).
std::vector<NetworkRecord> generate_records(const std::vector<SpaceSpec>& spaces,
                                            const GenOptions& options, std::uint64_t seed,
                                            int threads = 0);

// accuracy = 0.5 + 0.5 tanh(score / median|score|), strictly increasing in
// the program score. Throws NumericalFailure when the program fails on a
// record.
void plant_labels(std::vector<NetworkRecord>& records, const ExprProgram& program);

// Random permutation of the accuracy labels across records.
void shuffle_labels(std::vector<NetworkRecord>& records, Rng& rng);

}  // namespace zcforge

#endif  // ZCFORGE_GENERATE_HPP_
