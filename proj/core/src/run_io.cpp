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

#include "zcforge/run_io.hpp"

#include <fstream>
#include <sstream>

namespace zcforge {

using nlohmann::json;

json individual_to_json(const Individual& ind) {
  json j = {{"program", format_expression(ind.program)},
            {"to_scalar", std::string(to_scalar_name(ind.program.to_scalar()))},
            {"per_space_tau", ind.per_space_tau}};
  j["fitness"] = ind.fitness ? json(*ind.fitness) : json(nullptr);
  return j;
}

Individual individual_from_json(const json& j) {
  try {
    const auto ts = to_scalar_from_name(j.at("to_scalar").get<std::string>());
    if (!ts) throw DataError("unknown to_scalar in individual");
    Individual ind{parse_program(j.at("program").get<std::string>()).with_to_scalar(*ts),
                   std::nullopt,
                   j.at("per_space_tau").get<std::map<std::string, double>>()};
    if (!j.at("fitness").is_null()) ind.fitness = j.at("fitness").get<double>();
    return ind;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed individual record: ") + e.what());
  }
}

json generation_to_json(const GenerationLog& g) {
  json inds = json::array();
  for (const auto& ind : g.individuals) inds.push_back(individual_to_json(ind));
  return {{"type", "generation"},
          {"generation", g.generation},
          {"spaces", g.spaces},
          {"best_fitness", g.best_fitness},
          {"median_fitness", g.median_fitness},
          {"evaluations", g.evaluations},
          {"wall_seconds", g.wall_seconds},
          {"individuals", inds}};
}

json state_to_json(const EvolutionState& s) {
  json pop = json::array();
  for (const auto& ind : s.population) pop.push_back(individual_to_json(ind));
  json hof = json::array();
  for (const auto& ind : s.hall_of_fame.entries()) hof.push_back(individual_to_json(ind));
  return {{"next_generation", s.next_generation},
          {"hall_of_fame_size", s.hall_of_fame.capacity()},
          {"population", pop},
          {"hall_of_fame", hof}};
}

EvolutionState state_from_json(const json& j) {
  try {
    EvolutionState s{j.at("next_generation").get<int>(), {},
                     HallOfFame(j.at("hall_of_fame_size").get<std::size_t>())};
    for (const auto& p : j.at("population")) s.population.push_back(individual_from_json(p));
    // Re-inserting in rank order reproduces the same hall of fame.
    std::vector<Individual> hof;
    for (const auto& p : j.at("hall_of_fame")) hof.push_back(individual_from_json(p));
    s.hall_of_fame.update(hof);
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw DataError("cannot write " + partial.string());
  }
  std::filesystem::rename(partial, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace zcforge
