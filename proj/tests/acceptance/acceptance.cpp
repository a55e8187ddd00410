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

// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit 1 if any fail.
//
//   acceptance [--only N[,N...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracle/fd_check.hpp"
#include "oracle/primitive_oracle.hpp"
#include "oracle/rank_oracle.hpp"
#include "zcforge/config.hpp"
#include "zcforge/dataset.hpp"
#include "zcforge/evolve.hpp"
#include "zcforge/generate.hpp"
#include "zcforge/run_io.hpp"
#include "zcforge/scoring.hpp"
#include "zcforge/search.hpp"

namespace zcforge {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failed = 0;

void report(int id, const char* title, const Outcome& o, double secs) {
  std::printf("[%s] C%d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title,
              o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++g_failed;
}

// --- 1 ----------------------------------------------------------------------

Outcome primitive_fidelity() {
  const auto t0 = Clock::now();
  std::map<Op, int> per_op;
  int mismatches = 0;
  std::string first;
  for (const auto& c : oracle::primitive_cases()) {
    ++per_op[c.op];
    Tensor got;
    try {
      got = c.b ? eval_primitive(c.op, c.a, *c.b) : eval_primitive(c.op, c.a);
    } catch (const ExecutionFailure& e) {
      ++mismatches;
      if (first.empty()) first = std::string(primitive_name(c.op)) + " threw " + e.what();
      continue;
    }
    const oracle::Value want = oracle::ref_primitive(c.op, c.a, c.b ? &*c.b : nullptr);
    const std::string why = oracle::compare(c, got, want, 1e-6);
    if (!why.empty()) {
      ++mismatches;
      if (first.empty()) first = std::string(primitive_name(c.op)) + " " + why;
    }
  }
  int thin = 0;
  for (const auto& info : primitive_table()) thin += per_op[info.op] < 5;
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = mismatches == 0 && thin == 0 && per_op.size() == 34 && secs < 5.0;
  o.detail = std::to_string(per_op.size()) + " ops, " + std::to_string(mismatches) +
             " mismatches, " + std::to_string(thin) + " ops under 5 cases" +
             (first.empty() ? "" : ", first: " + first);
  return o;
}

// --- 2 ----------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  std::vector<SpaceSpec> spaces = default_spaces();
  Rng rng = make_rng(2026, {2});
  std::size_t checked = 0, failed = 0, redrawn = 0;
  double worst = 0;
  std::string first;
  for (int i = 0; i < 10; ++i) {
    const SpaceSpec& s = spaces[static_cast<std::size_t>(i) % spaces.size()];
    const ToyArch arch = sample_space(s, 1, rng).front();
    const oracle::FdReport rep = oracle::fd_check(arch, 100 + static_cast<std::uint64_t>(i));
    checked += rep.checked;
    failed += rep.failed;
    redrawn += rep.redrawn;
    worst = std::max(worst, rep.worst_rel);
    if (first.empty() && rep.failed) first = arch.describe() + " " + rep.first_failure;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed == 0 && checked > 0 && secs < 120.0;
  o.detail = std::to_string(checked) + " coordinates on 10 architectures, " +
             std::to_string(failed) + " outside 1e-4 rel + 16-ulp roundoff slack, " +
             std::to_string(redrawn) +
             " kink redraws, worst rel " + fmt("%.2e", worst) +
             (first.empty() ? "" : ", first: " + first);
  return o;
}

// --- 3 ----------------------------------------------------------------------

Outcome rank_oracle() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(2026, {3});
  std::uniform_int_distribution<std::size_t> len(2, 50);
  int tau_bad = 0, rho_bad = 0, degenerate = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = len(rng);
    std::uniform_int_distribution<int> vx(0, 1 + t % 12), vy(-3, 3 + t % 20);
    std::vector<double> x(n), y(n);
    for (double& v : x) v = vx(rng);
    for (double& v : y) v = vy(rng);
    const double bt = oracle::brute_tau_b(x, y), br = oracle::brute_rho(x, y);
    const Correlation kt = kendall_tau(x, y), sr = spearman_rho(x, y);
    if (std::isnan(bt)) {
      ++degenerate;
      tau_bad += !(kt.degenerate && kt.value == 0.0);
      rho_bad += !(sr.degenerate && sr.value == 0.0);
      continue;
    }
    tau_bad += kt.degenerate || kt.value != bt;
    rho_bad += sr.degenerate || sr.value != br;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = tau_bad == 0 && rho_bad == 0 && secs < 5.0;
  o.detail = "100 tied integer vectors (" + std::to_string(degenerate) +
             " degenerate), tau mismatches " + std::to_string(tau_bad) +
             ", rho mismatches " + std::to_string(rho_bad);
  return o;
}

// --- 4, 5, 6 ----------------------------------------------------------------

struct PlantedRun {
  std::uint64_t seed = 0;
  double heldout_tau = 0;
  double hof_fitness = 0;
  std::string best;
  std::vector<std::string> log_lines;  // generation_to_json dumps
  std::size_t probe_violations = 0;
  std::size_t logged = 0;
  bool threw = false;
  std::string error;
};

const std::size_t kTestNetsPerSpace = 50;

PlantedRun planted_run(std::uint64_t seed, bool shuffled) {
  PlantedRun out;
  out.seed = seed;
  GenOptions go;
  go.label_mode = LabelMode::kPlanted;
  go.planted_program = "(l1_mean T3G_N)";
  go.nets_per_space = 80;
  go.shuffle_labels = shuffled;
  GenOptions gt = go;
  gt.nets_per_space = kTestNetsPerSpace;
  gt.id_prefix = "test-";
  const TaskDataset td = make_task_dataset(generate_records(default_spaces(), go, seed));
  const TaskDataset test =
      make_task_dataset(generate_records(default_spaces(), gt, seed + 1000));

  EvolutionConfig cfg;  // pop 50, 15 generations, depth 2-10, 0.4/0.4, s=4, k=20
  cfg.seed = seed;
  const auto probe = make_probe(td, 2);
  EvolutionResult res;
  try {
    res = run_evolution(cfg, td, probe, [&](const GenerationLog& g, const EvolutionState&) {
      out.log_lines.push_back(generation_to_json(g).dump());
      // independent re-check of the probe guarantee
      for (const Individual& ind : g.individuals) {
        ++out.logged;
        double sum = 0;
        bool ok = true;
        for (const BlockStats& b : probe) {
          const auto s = block_scalar(ind.program, b);
          if (!s || !std::isfinite(*s)) {
            ok = false;
            break;
          }
          sum += *s;
        }
        if (!ok || !std::isfinite(sum / static_cast<double>(probe.size()))) {
          ++out.probe_violations;
        }
      }
    });
  } catch (const std::exception& e) {
    out.threw = true;
    out.error = e.what();
    return out;
  }
  const Individual& best = res.hall_of_fame.entries().front();
  out.best = format_expression(best.program);
  out.hof_fitness = *best.fitness;
  const auto reports = test_programs({{"hof", best.program}}, td.ids(), test);
  out.heldout_tau = reports.front().tau_all.value;
  return out;
}

std::vector<PlantedRun>& planted_runs() {
  static std::vector<PlantedRun> runs = [] {
    std::vector<PlantedRun> r;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) r.push_back(planted_run(seed, false));
    return r;
  }();
  return runs;
}

Outcome planted_recovery() {
  const auto t0 = Clock::now();
  int hits = 0;
  std::string taus;
  std::string err;
  for (const PlantedRun& r : planted_runs()) {
    if (r.threw) {
      err = r.error;
      continue;
    }
    hits += r.heldout_tau >= 0.9;
    taus += (taus.empty() ? "" : " ") + fmt("%.3f", r.heldout_tau);
  }
  double worst_null = 0;
  std::string nulls;
  for (std::uint64_t seed : {101, 102, 103}) {
    const PlantedRun r = planted_run(seed, true);
    if (r.threw) {
      err = r.error;
      worst_null = 1;
      continue;
    }
    worst_null = std::max(worst_null, std::fabs(r.heldout_tau));
    nulls += (nulls.empty() ? "" : " ") + fmt("%.3f", r.heldout_tau);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = hits >= 8 && worst_null <= 0.2 && err.empty() && secs < 1800;
  o.detail = std::to_string(hits) + "/10 seeds with held-out tau >= 0.9 [" + taus +
             "], shuffled-label control |tau| [" + nulls + "]" +
             (err.empty() ? "" : ", error: " + err);
  return o;
}

Outcome validity_guarantee() {
  std::size_t logged = 0, violations = 0;
  int threw = 0;
  for (const PlantedRun& r : planted_runs()) {
    logged += r.logged;
    violations += r.probe_violations;
    threw += r.threw;
  }
  Outcome o;
  o.pass = violations == 0 && threw == 0 && logged > 0;
  o.detail = std::to_string(logged) + " evaluated individuals over 10 runs, " +
             std::to_string(violations) + " non-finite on the probe set";
  return o;
}

// Pair-counting tau with failures below every score and the majority-failure
// rule.
double oracle_fitness_tau(const Scores& s, const std::vector<double>& acc) {
  std::size_t fails = 0;
  std::vector<double> x;
  for (const auto& v : s) {
    fails += !v.has_value();
    x.push_back(v ? *v : -HUGE_VAL);
  }
  if (2 * fails > s.size()) return -1.0;
  const double t = oracle::brute_tau_b(x, acc);
  return std::isnan(t) ? 0.0 : t;
}

Outcome fitness_semantics() {
  std::size_t checked = 0, bad = 0;
  std::string first;
  for (const PlantedRun& r : planted_runs()) {
    if (r.threw) {
      ++bad;
      continue;
    }
    // rebuild the evolution dataset; the log names the spaces, the batch
    // stream gives the records
    GenOptions go;
    go.label_mode = LabelMode::kPlanted;
    go.nets_per_space = 80;
    const TaskDataset td = make_task_dataset(generate_records(default_spaces(), go, r.seed));
    for (const std::string& line : r.log_lines) {
      const nlohmann::json g = nlohmann::json::parse(line);
      const auto gen = g.at("generation").get<std::uint64_t>();
      Rng batch_rng = make_rng(r.seed, {4ull << 32 | gen});
      const auto batch = sample_fitness_batch(td, 4, 20, batch_rng);
      std::vector<std::string> spaces;
      for (const auto& s : batch) spaces.push_back(s.space);
      if (g.at("spaces").get<std::vector<std::string>>() != spaces) {
        ++bad;
        if (first.empty()) first = "generation " + std::to_string(gen) + " spaces differ";
        continue;
      }
      for (const auto& jind : g.at("individuals")) {
        const Individual ind = individual_from_json(jind);
        double lo = HUGE_VAL;
        bool ok = ind.per_space_tau.size() == 4;
        for (const auto& s : batch) {
          Scores scores;
          std::vector<double> acc;
          for (const NetworkRecord* rec : s.records) {
            scores.push_back(score_network(ind.program, *rec).score);
            acc.push_back(rec->accuracy);
          }
          const double t = oracle_fitness_tau(scores, acc);
          const auto it = ind.per_space_tau.find(s.space);
          ok = ok && it != ind.per_space_tau.end() && std::fabs(it->second - t) <= 1e-12;
          lo = std::min(lo, t);
        }
        ok = ok && ind.fitness && std::fabs(*ind.fitness - lo) <= 1e-12;
        ++checked;
        if (!ok) {
          ++bad;
          if (first.empty()) first = format_expression(ind.program);
        }
      }
    }
  }
  Outcome o;
  o.pass = bad == 0 && checked > 0;
  o.detail = std::to_string(checked) + " logged individuals recomputed (s=4, k=20), " +
             std::to_string(bad) + " mismatches" + (first.empty() ? "" : ", first: " + first);
  return o;
}

// --- 7 ----------------------------------------------------------------------

Outcome behavioral_echo() {
  const RunConfig cfg = load_config(std::string(ZCFORGE_SOURCE_DIR) + "/configs/default.json");
  const auto points =
      analyze_program(parse_program("(l1_mean T3G_N)"), cfg.analyze.grid, cfg.analyze.repeats,
                      cfg.seed);
  auto monotone = [&](GridAxis axis, std::string& text) {
    const auto med = axis_medians(points, axis);
    bool up = true;
    for (std::size_t i = 0; i < med.size(); ++i) {
      text += (i ? " " : "") + std::to_string(med[i].first) + ":" + fmt("%.4g", med[i].second);
      if (i && med[i].second < med[i - 1].second) up = false;
    }
    return up;
  };
  std::string ch, dp;
  const bool c_up = monotone(GridAxis::kChannels, ch);
  const bool d_up = monotone(GridAxis::kDepth, dp);
  Outcome o;
  o.pass = c_up && d_up;
  o.detail = std::string("channels ") + (c_up ? "non-decreasing" : "DECREASING") + " [" + ch +
             "], depth " + (d_up ? "non-decreasing" : "DECREASING") + " [" + dp + "], " +
             std::to_string(cfg.analyze.repeats) + " draws per point";
  return o;
}

// --- 8 ----------------------------------------------------------------------

Outcome baseline_regression() {
  const std::string fix = std::string(ZCFORGE_SOURCE_DIR) + "/tests/fixtures";
  const TaskDataset td = read_dataset(fix + "/net10");
  std::size_t compared = 0, differ = 0, nonpositive = 0;
  for (const NamedProgram& np : baseline_proxies()) {
    std::map<std::string, std::string> frozen;
    std::ifstream in(fix + "/net10_" + np.name + ".tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      frozen[line.substr(0, tab)] = line.substr(tab + 1);
    }
    for (const auto& [_, recs] : td.spaces) {
      for (const NetworkRecord& r : recs) {
        const auto s = score_network(np.program, r).score;
        const std::string got = s ? fmt("%.17g", *s) : "fail";
        ++compared;
        differ += frozen.count(r.id) == 0 || frozen[r.id] != got;
        if (np.name == "synflow") nonpositive += !(s && *s > 0.0);
      }
    }
  }
  Outcome o;
  o.pass = compared == 30 && differ == 0 && nonpositive == 0;
  o.detail = std::to_string(compared) + " scores vs frozen fixtures, " +
             std::to_string(differ) + " differ, " + std::to_string(nonpositive) +
             " synflow scores <= 0";
  return o;
}

// --- 9 ----------------------------------------------------------------------

std::string hall_of_fame_text(int threads) {
  const RunConfig cfg = load_config(std::string(ZCFORGE_SOURCE_DIR) + "/configs/planted.json");
  GenOptions go = cfg.statsgen;
  const TaskDataset td =
      make_task_dataset(generate_records(cfg.spaces, go, cfg.seed, threads));
  EvolutionConfig ec = cfg.evolution;
  ec.threads = threads;
  const EvolutionResult r = run_evolution(ec, td, make_probe(td, cfg.probe_per_space));
  std::vector<NamedProgram> named;
  std::string fitness;
  for (const Individual& e : r.hall_of_fame.entries()) {
    named.push_back({"hof-" + std::to_string(named.size() + 1), e.program});
    fitness += fmt("%.17g\n", *e.fitness);
  }
  return format_corpus(named) + fitness;
}

Outcome determinism() {
  const std::string a = hall_of_fame_text(1);
  const std::string b = hall_of_fame_text(4);
  const std::string c = hall_of_fame_text(1);
  Outcome o;
  o.pass = a == b && a == c && !a.empty();
  o.detail = std::string("hall of fame with 1 vs 4 threads ") +
             (a == b ? "byte-identical" : "DIFFERS") + ", repeat run " +
             (a == c ? "byte-identical" : "DIFFERS");
  return o;
}

// --- 10 ---------------------------------------------------------------------

Outcome aging_vs_random() {
  const RunConfig cfg =
      load_config(std::string(ZCFORGE_SOURCE_DIR) + "/configs/nas_params.json");
  const SpaceSpec& space = cfg.spaces.front();
  const auto all = enumerate_space(space);
  std::vector<std::int64_t> params;
  for (const auto& a : all) params.push_back(a.param_count());
  std::sort(params.rbegin(), params.rend());
  const double max_params = static_cast<double>(params.front());
  const std::int64_t cut = params[std::max<std::size_t>(1, params.size() / 100) - 1];
  const auto accuracy = [&](const ToyArch& a) {
    return static_cast<double>(a.param_count()) / max_params;
  };
  const auto in_top = [&](const ToyArch& a) { return a.param_count() >= cut; };
  const ExprProgram proxy = parse_program("(numel T3)");

  AgingOptions ae = cfg.search.aging;
  int ae_hits = 0;
  std::vector<double> ae_evals, rs_evals;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng r1 = make_rng(seed, {10, 1});
    const NasRunResult run = aging_evolution(proxy, space, ae, accuracy, r1);
    const auto hit = evaluations_until(run, in_top);
    ae_hits += hit.has_value();
    ae_evals.push_back(hit ? static_cast<double>(*hit) : HUGE_VAL);
    // random search runs long enough that its hitting time is never censored
    Rng r2 = make_rng(seed, {10, 2});
    const NasRunResult rs = random_search(nullptr, space, 5000, {}, accuracy, r2);
    const auto rs_hit = evaluations_until(rs, in_top);
    rs_evals.push_back(rs_hit ? static_cast<double>(*rs_hit) : HUGE_VAL);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double ae_med = median(ae_evals), rs_med = median(rs_evals);
  Outcome o;
  o.pass = ae_hits >= 9 && rs_med >= 2 * ae_med;
  o.detail = std::to_string(ae_hits) + "/10 aging runs reach the top 1% (" +
             std::to_string(params.size() / 100) + " of " + std::to_string(params.size()) +
             ") within " + std::to_string(ae.budget) + ", median evaluations aging " +
             fmt("%.1f", ae_med) + " vs random " + fmt("%.1f", rs_med);
  return o;
}

}  // namespace
}  // namespace zcforge

int main(int argc, char** argv) {
  using namespace zcforge;
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    }
  }
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "primitive fidelity", primitive_fidelity},
      {2, "gradient correctness", gradient_correctness},
      {3, "rank-correlation oracle", rank_oracle},
      {4, "planted-proxy recovery", planted_recovery},
      {5, "validity guarantee", validity_guarantee},
      {6, "fitness semantics", fitness_semantics},
      {7, "score trend in channels and depth", behavioral_echo},
      {8, "baseline regression", baseline_regression},
      {9, "determinism", determinism},
      {10, "aging evolution vs random search", aging_vs_random},
  };
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(c.id, c.title, o, seconds_since(t0));
  }
  return g_failed == 0 ? 0 : 1;
}
