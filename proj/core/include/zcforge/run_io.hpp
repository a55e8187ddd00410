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

// JSON forms of evolution artifacts: run log lines, checkpoints.
//
// Programs are stored as their expression text; fitness values as JSON
// numbers (round-trip exact for doubles).

#ifndef ZCFORGE_RUN_IO_HPP_
#define ZCFORGE_RUN_IO_HPP_

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "zcforge/evolve.hpp"

namespace zcforge {

nlohmann::json individual_to_json(const Individual& ind);
Individual individual_from_json(const nlohmann::json& j);  // throws DataError

// One run-log line: generation, sampled spaces, best and median fitness,
// evaluation count, wall time and every evaluated individual.
nlohmann::json generation_to_json(const GenerationLog& g);

nlohmann::json state_to_json(const EvolutionState& s);
EvolutionState state_from_json(const nlohmann::json& j);  // throws DataError

// Writes `text` to `path` via `path.partial` and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_text_file(const std::filesystem::path& path);  // throws DataError

}  // namespace zcforge

#endif  // ZCFORGE_RUN_IO_HPP_
