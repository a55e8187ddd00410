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

#include "zcforge/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace zcforge {

using nlohmann::json;

namespace {

// Typed access to one JSON object; remembers which keys were read so the
// rest can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!j_.contains(key)) throw ConfigError("missing required key " + where(key));
    get(key, out);
  }

  // Nested object, or nullptr when absent.
  const json* child(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const char* key = nullptr) const {
    if (!key) return "'" + (path_.empty() ? std::string("<root>") : path_) + "'";
    return "'" + (path_.empty() ? std::string(key) : path_ + "." + key) + "'";
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) {
        throw ConfigError("unknown key " + where(it.key().c_str()));
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

SpaceSpec space_from_json(const json& j, const std::string& path) {
  Section s(j, path);
  SpaceSpec spec;
  s.require("name", spec.name);
  std::string pattern = std::string(pattern_name(spec.pattern));
  s.get("pattern", pattern);
  try {
    spec.pattern = pattern_from_name(pattern);
  } catch (const Error& e) {
    throw ConfigError(s.where("pattern") + ": " + e.what());
  }
  s.get("min_depth", spec.min_depth);
  s.get("max_depth", spec.max_depth);
  s.get("channels", spec.channels);
  s.get("kernels", spec.kernels);
  s.get("resolution", spec.resolution);
  s.get("in_channels", spec.in_channels);
  s.get("num_classes", spec.num_classes);
  s.get("shared_block_config", spec.shared_block_config);
  s.finish();
  validate_space(spec);
  return spec;
}

json space_to_json(const SpaceSpec& s) {
  return {{"name", s.name},
          {"pattern", std::string(pattern_name(s.pattern))},
          {"min_depth", s.min_depth},
          {"max_depth", s.max_depth},
          {"channels", s.channels},
          {"kernels", s.kernels},
          {"resolution", s.resolution},
          {"in_channels", s.in_channels},
          {"num_classes", s.num_classes},
          {"shared_block_config", s.shared_block_config}};
}

Precision precision_from_name(const std::string& name) {
  if (name == "float32") return Precision::kFloat32;
  if (name == "float64") return Precision::kFloat64;
  throw ConfigError("precision must be float32 or float64, got '" + name + "'");
}

std::string precision_name(Precision p) {
  return p == Precision::kFloat32 ? "float32" : "float64";
}

void read_statsgen(const json& j, GenOptions& g) {
  Section s(j, "statsgen");
  s.get("nets_per_space", g.nets_per_space);
  s.get("batch_size", g.batch_size);
  s.get("noise_scale", g.capture.noise_scale);
  std::string precision = precision_name(g.capture.precision);
  s.get("precision", precision);
  g.capture.precision = precision_from_name(precision);
  std::string label_mode(label_mode_name(g.label_mode));
  s.get("label_mode", label_mode);
  g.label_mode = label_mode_from_name(label_mode);
  s.get("planted_program", g.planted_program);
  s.get("shuffle_labels", g.shuffle_labels);
  s.get("dataset_name", g.dataset_name);
  s.get("id_prefix", g.id_prefix);
  if (const json* t = s.child("task")) {
    Section ts(*t, "statsgen.task");
    ts.get("num_classes", g.task.num_classes);
    ts.get("resolution", g.task.resolution);
    ts.get("in_channels", g.task.in_channels);
    ts.get("train_size", g.task.train_size);
    ts.get("test_size", g.task.test_size);
    ts.get("noise", g.task.noise);
    ts.finish();
  }
  if (const json* t = s.child("train")) {
    Section ts(*t, "statsgen.train");
    ts.get("epochs", g.train.epochs);
    ts.get("lr", g.train.lr);
    ts.get("batch_size", g.train.batch_size);
    ts.get("bn_momentum", g.train.bn_momentum);
    ts.finish();
  }
  s.finish();
  if (g.nets_per_space < 1) throw ConfigError("'statsgen.nets_per_space' must be >= 1");
  if (g.batch_size < 1) throw ConfigError("'statsgen.batch_size' must be >= 1");
  if (!(g.capture.noise_scale >= 0.0)) throw ConfigError("'statsgen.noise_scale' must be >= 0");
  if (g.train.epochs < 0 || !(g.train.lr > 0.0) || g.train.batch_size < 1) {
    throw ConfigError("'statsgen.train' needs epochs >= 0, lr > 0 and batch_size >= 1");
  }
  try {
    parse_program(g.planted_program);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("'statsgen.planted_program': ") + e.what());
  }
}

void read_evolution(const json& j, EvolutionConfig& e, std::size_t& probe_per_space) {
  Section s(j, "evolution");
  s.get("population_size", e.population_size);
  s.get("generations", e.generations);
  s.get("tournament_size", e.tournament_size);
  s.get("crossover_prob", e.crossover_prob);
  s.get("mutation_prob", e.mutation_prob);
  s.get("spaces_per_eval", e.spaces_per_eval);
  s.get("nets_per_space", e.nets_per_space);
  s.get("min_depth", e.min_depth);
  s.get("max_depth", e.max_depth);
  std::string mode(selection_mode_name(e.selection_mode));
  s.get("selection_mode", mode);
  e.selection_mode = selection_mode_from_name(mode);
  s.get("mu", e.mu);
  s.get("lambda", e.lambda);
  s.get("hall_of_fame_size", e.hall_of_fame_size);
  s.get("init_budget", e.init_budget);
  s.get("variation_budget", e.variation_budget);
  std::string to_scalar(to_scalar_name(e.to_scalar));
  s.get("to_scalar", to_scalar);
  const auto ts = to_scalar_from_name(to_scalar);
  if (!ts) throw ConfigError("'evolution.to_scalar' must be mean or l2");
  e.to_scalar = *ts;
  s.get("probe_per_space", probe_per_space);
  s.finish();
  if (probe_per_space < 1) throw ConfigError("'evolution.probe_per_space' must be >= 1");
}

void read_search(const json& j, SearchConfig& c) {
  Section s(j, "search");
  s.get("space", c.space);
  s.get("budget", c.aging.budget);
  s.get("population", c.aging.population);
  s.get("sample", c.aging.sample);
  s.get("batch_size", c.aging.proxy.batch_size);
  std::string acc = c.accuracy == AccuracySource::kTrain ? "train" : "params";
  s.get("accuracy", acc);
  if (acc == "train") {
    c.accuracy = AccuracySource::kTrain;
  } else if (acc == "params") {
    c.accuracy = AccuracySource::kParams;
  } else {
    throw ConfigError("'search.accuracy' must be train or params");
  }
  s.get("repeats", c.repeats);
  s.finish();
  if (c.aging.population < 1 || c.aging.sample < 1 || c.aging.budget < c.aging.population) {
    throw ConfigError("'search' needs budget >= population >= 1 and sample >= 1");
  }
  if (c.repeats < 1) throw ConfigError("'search.repeats' must be >= 1");
}

void read_analyze(const json& j, AnalyzeConfig& c) {
  Section s(j, "analyze");
  s.get("repeats", c.repeats);
  std::string pattern(pattern_name(c.grid.pattern));
  s.get("pattern", pattern);
  try {
    c.grid.pattern = pattern_from_name(pattern);
  } catch (const Error& e) {
    throw ConfigError(std::string("'analyze.pattern': ") + e.what());
  }
  s.get("channels", c.grid.channels);
  s.get("kernels", c.grid.kernels);
  s.get("depths", c.grid.depths);
  s.get("resolutions", c.grid.resolutions);
  s.get("in_channels", c.grid.in_channels);
  s.get("num_classes", c.grid.num_classes);
  s.get("batch_size", c.grid.batch_size);
  s.finish();
  if (c.repeats < 1) throw ConfigError("'analyze.repeats' must be >= 1");
  if (c.grid.channels.empty() || c.grid.kernels.empty() || c.grid.depths.empty() ||
      c.grid.resolutions.empty()) {
    throw ConfigError("'analyze' grid axes must be non-empty");
  }
}

}  // namespace

std::vector<SpaceSpec> default_spaces() {
  std::vector<SpaceSpec> out(4);
  out[0].name = "rcb-narrow";
  out[1].name = "rcb-wide";
  out[1].channels = {8, 16, 32};
  out[1].kernels = {3, 5};
  out[2].name = "cbr-narrow";
  out[2].pattern = BlockPattern::kCBR;
  out[3].name = "cbr-deep";
  out[3].pattern = BlockPattern::kCBR;
  out[3].min_depth = 3;
  out[3].max_depth = 6;
  out[3].channels = {4, 8};
  out[3].kernels = {1, 3};
  return out;
}

RunConfig config_from_json(const json& j) {
  Section root(j, "");
  RunConfig cfg;
  root.require("seed", cfg.seed);
  root.get("threads", cfg.threads);
  if (const json* sp = root.child("spaces")) {
    if (!sp->is_array() || sp->empty()) throw ConfigError("'spaces' must be a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < sp->size(); ++i) {
      SpaceSpec spec = space_from_json((*sp)[i], "spaces[" + std::to_string(i) + "]");
      if (!names.insert(spec.name).second) {
        throw ConfigError("duplicate space name '" + spec.name + "'");
      }
      cfg.spaces.push_back(std::move(spec));
    }
  } else {
    cfg.spaces = default_spaces();
  }
  if (const json* s = root.child("statsgen")) read_statsgen(*s, cfg.statsgen);
  if (const json* s = root.child("evolution")) read_evolution(*s, cfg.evolution, cfg.probe_per_space);
  if (const json* s = root.child("search")) read_search(*s, cfg.search);
  if (const json* s = root.child("analyze")) read_analyze(*s, cfg.analyze);
  root.finish();

  cfg.evolution.seed = cfg.seed;
  cfg.evolution.threads = cfg.threads;
  validate_config(cfg.evolution);
  if (!cfg.search.space.empty()) {
    bool found = false;
    for (const auto& s : cfg.spaces) found = found || s.name == cfg.search.space;
    if (!found) throw ConfigError("'search.space' names unknown space '" + cfg.search.space + "'");
  }
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json spaces = json::array();
  for (const auto& s : cfg.spaces) spaces.push_back(space_to_json(s));
  const GenOptions& g = cfg.statsgen;
  const EvolutionConfig& e = cfg.evolution;
  const SearchConfig& sc = cfg.search;
  const AnalyzeGrid& ag = cfg.analyze.grid;
  return {
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"spaces", spaces},
      {"statsgen",
       {{"nets_per_space", g.nets_per_space},
        {"batch_size", g.batch_size},
        {"noise_scale", g.capture.noise_scale},
        {"precision", precision_name(g.capture.precision)},
        {"label_mode", std::string(label_mode_name(g.label_mode))},
        {"planted_program", g.planted_program},
        {"shuffle_labels", g.shuffle_labels},
        {"dataset_name", g.dataset_name},
        {"id_prefix", g.id_prefix},
        {"task",
         {{"num_classes", g.task.num_classes},
          {"resolution", g.task.resolution},
          {"in_channels", g.task.in_channels},
          {"train_size", g.task.train_size},
          {"test_size", g.task.test_size},
          {"noise", g.task.noise}}},
        {"train",
         {{"epochs", g.train.epochs},
          {"lr", g.train.lr},
          {"batch_size", g.train.batch_size},
          {"bn_momentum", g.train.bn_momentum}}}}},
      {"evolution",
       {{"population_size", e.population_size},
        {"generations", e.generations},
        {"tournament_size", e.tournament_size},
        {"crossover_prob", e.crossover_prob},
        {"mutation_prob", e.mutation_prob},
        {"spaces_per_eval", e.spaces_per_eval},
        {"nets_per_space", e.nets_per_space},
        {"min_depth", e.min_depth},
        {"max_depth", e.max_depth},
        {"selection_mode", std::string(selection_mode_name(e.selection_mode))},
        {"mu", e.mu},
        {"lambda", e.lambda},
        {"hall_of_fame_size", e.hall_of_fame_size},
        {"init_budget", e.init_budget},
        {"variation_budget", e.variation_budget},
        {"to_scalar", std::string(to_scalar_name(e.to_scalar))},
        {"probe_per_space", cfg.probe_per_space}}},
      {"search",
       {{"space", sc.space},
        {"budget", sc.aging.budget},
        {"population", sc.aging.population},
        {"sample", sc.aging.sample},
        {"batch_size", sc.aging.proxy.batch_size},
        {"accuracy", sc.accuracy == AccuracySource::kTrain ? "train" : "params"},
        {"repeats", sc.repeats}}},
      {"analyze",
       {{"repeats", cfg.analyze.repeats},
        {"pattern", std::string(pattern_name(ag.pattern))},
        {"channels", ag.channels},
        {"kernels", ag.kernels},
        {"depths", ag.depths},
        {"resolutions", ag.resolutions},
        {"in_channels", ag.in_channels},
        {"num_classes", ag.num_classes},
        {"batch_size", ag.batch_size}}},
  };
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace zcforge
