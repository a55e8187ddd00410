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

// Run configuration as a JSON document. `seed` is required; every other key
// has a default. Unknown keys are rejected so typos do not pass silently.
//
//   {
//     "seed": 7,
//     "threads": 0,
//     "spaces":    [ { "name": "rcb", "pattern": "RCB", ... } ],
//     "statsgen":  { "nets_per_space": 80, "batch_size": 1, ... },
//     "evolution": { "population_size": 50, "generations": 15, ... },
//     "search":    { "space": "rcb", "budget": 200, ... },
//     "analyze":   { "repeats": 5000, "channels": [4, 8, 16], ... }
//   }

#ifndef ZCFORGE_CONFIG_HPP_
#define ZCFORGE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zcforge/evolve.hpp"
#include "zcforge/generate.hpp"
#include "zcforge/search.hpp"

namespace zcforge {

enum class AccuracySource : std::uint8_t {
  kTrain,   // train each visited architecture
  kParams,  // parameter count relative to the largest in the space
};

struct SearchConfig {
  std::string space;  // empty: first space
  AgingOptions aging;
  AccuracySource accuracy = AccuracySource::kTrain;
  std::size_t repeats = 1;
};

struct AnalyzeConfig {
  AnalyzeGrid grid;
  std::size_t repeats = 5000;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<SpaceSpec> spaces;
  GenOptions statsgen;
  EvolutionConfig evolution;
  std::size_t probe_per_space = 2;
  SearchConfig search;
  AnalyzeConfig analyze;
};

// Throws ConfigError on missing `seed`, unknown keys, wrong types or values
// out of range.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

// Reads and parses a config file. JSON syntax errors are ConfigErrors.
RunConfig load_config(const std::filesystem::path& path);

// Built-in defaults for the default spaces (one RCB and one CBR family per
// channel range).
std::vector<SpaceSpec> default_spaces();

}  // namespace zcforge

#endif  // ZCFORGE_CONFIG_HPP_
