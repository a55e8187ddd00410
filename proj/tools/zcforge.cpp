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

// zcforge command-line tool.
//
// Exit codes: 0 ok, 2 config, 3 data, 4 numeric or search failure.

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zcforge/config.hpp"
#include "zcforge/dataset.hpp"
#include "zcforge/evolve.hpp"
#include "zcforge/generate.hpp"
#include "zcforge/parallel.hpp"
#include "zcforge/run_io.hpp"
#include "zcforge/scoring.hpp"
#include "zcforge/search.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zcforge;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Writes to `path.partial`, renaming on success.
class PartialFile {
 public:
  explicit PartialFile(fs::path path) : path_(std::move(path)), partial_(path_) {
    partial_ += ".partial";
    out_.open(partial_, std::ios::binary | std::ios::trunc);
    if (!out_) throw DataError("cannot write " + partial_.string());
  }
  std::ostream& stream() { return out_; }
  void commit() {
    out_.close();
    if (!out_) throw DataError("write failed for " + partial_.string());
    fs::rename(partial_, path_);
  }

 private:
  fs::path path_;
  fs::path partial_;
  std::ofstream out_;
};

// Writes report text to --out (atomically) or stdout.
void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  write_file_atomic(out, text);
}

struct ProgramSource {
  std::string file;
  std::string expr;
  std::string name;
};

void add_program_options(CLI::App* cmd, ProgramSource& src) {
  cmd->add_option("--program,-p", src.file, "program or corpus file");
  cmd->add_option("--expr,-e", src.expr, "program given inline, e.g. \"(abs T3G_N)\"");
  cmd->add_option("--name", src.name, "entry to use when the file is a corpus");
}

NamedProgram load_program(const ProgramSource& src) {
  if (src.file.empty() == src.expr.empty()) {
    throw ConfigError("give exactly one of --program and --expr");
  }
  if (!src.expr.empty()) return {"expr", parse_program(src.expr)};
  const std::string text = read_text_file(src.file);
  if (!src.name.empty()) {
    for (auto& np : parse_corpus(text)) {
      if (np.name == src.name) return np;
    }
    throw ConfigError("no program named '" + src.name + "' in " + src.file);
  }
  try {
    return {fs::path(src.file).stem().string(), parse_program(text)};
  } catch (const ParseError&) {
    const auto corpus = parse_corpus(text);
    if (corpus.size() == 1) return corpus.front();
    throw ConfigError(src.file + " holds several programs; pick one with --name");
  }
}

void apply_threads(RunConfig& cfg, int threads) {
  if (threads > 0) {
    cfg.threads = threads;
    cfg.evolution.threads = threads;
  }
}

// --- gen-stats ----------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> id_prefix;
  int threads = 0;
};

int cmd_gen_stats(const GenArgs& a) {
  RunConfig cfg = load_config(a.config);
  apply_threads(cfg, a.threads);
  if (a.seed) cfg.seed = *a.seed;
  if (a.id_prefix) cfg.statsgen.id_prefix = *a.id_prefix;
  const fs::path out(a.out);
  if (fs::exists(out)) throw ConfigError("output directory " + a.out + " already exists");
  fs::path partial = out;
  partial += ".partial";
  fs::remove_all(partial);
  const auto records = generate_records(cfg.spaces, cfg.statsgen, cfg.seed, cfg.threads);
  write_dataset(records, partial);
  write_file_atomic(partial / "config.json", config_to_json(cfg).dump(2) + "\n");
  fs::rename(partial, out);
  std::cerr << "wrote " << records.size() << " records to " << a.out << "\n";
  return 0;
}

// --- evolve -------------------------------------------------------------------

struct EvolveArgs {
  std::string config;
  std::string data;
  std::string out;
  bool resume = false;
  int threads = 0;
};

int cmd_evolve(const EvolveArgs& a) {
  RunConfig cfg = load_config(a.config);
  apply_threads(cfg, a.threads);
  const TaskDataset td = read_dataset(a.data);
  const fs::path run(a.out);
  const fs::path checkpoint = run / "checkpoint.json";
  const fs::path log_final = run / "log.jsonl";
  fs::path log_partial = log_final;
  log_partial += ".partial";

  std::optional<EvolutionState> resume;
  if (a.resume) {
    if (!fs::exists(checkpoint)) throw DataError("no checkpoint.json in " + a.out);
    resume = state_from_json(json::parse(read_text_file(checkpoint)));
    if (fs::exists(log_final)) fs::rename(log_final, log_partial);
  } else if (fs::exists(run) && !fs::is_empty(run)) {
    throw ConfigError("run directory " + a.out + " is not empty (use --resume)");
  }
  fs::create_directories(run);

  const json resolved = config_to_json(cfg);
  if (!resume) {
    const json meta = {{"config", resolved},
                       {"seed", cfg.seed},
                       {"data", fs::absolute(a.data).string()},
                       {"evolution_ids", td.ids()}};
    write_file_atomic(run / "run.json", meta.dump(1) + "\n");
  }

  // Keep only log lines older than the resume point.
  std::vector<std::string> kept;
  if (resume && fs::exists(log_partial)) {
    std::istringstream in(read_text_file(log_partial));
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.value("type", "") == "generation" &&
          j.value("generation", 0) >= resume->next_generation) {
        continue;
      }
      kept.push_back(line);
    }
  }
  std::ofstream log(log_partial, std::ios::binary | std::ios::trunc);
  if (!log) throw DataError("cannot write " + log_partial.string());
  if (!resume) {
    log << json{{"type", "config"}, {"seed", cfg.seed}, {"config", resolved}}.dump() << "\n";
  }
  for (const auto& line : kept) log << line << "\n";
  log.flush();

  const std::vector<BlockStats> probe = make_probe(td, cfg.probe_per_space);
  const EvolutionResult result = run_evolution(
      cfg.evolution, td, probe,
      [&](const GenerationLog& g, const EvolutionState& state) {
        log << generation_to_json(g).dump() << "\n";
        log.flush();
        write_file_atomic(checkpoint, state_to_json(state).dump() + "\n");
        std::cerr << "generation " << g.generation << ": best " << fmt_short(g.best_fitness)
                  << " median " << fmt_short(g.median_fitness) << " (" << g.evaluations
                  << " evaluations, " << fmt_short(g.wall_seconds) << " s)\n";
      },
      resume);
  log.close();

  std::vector<NamedProgram> hof;
  json hof_json = json::array();
  for (std::size_t i = 0; i < result.hall_of_fame.entries().size(); ++i) {
    const Individual& ind = result.hall_of_fame.entries()[i];
    hof.push_back({"hof-" + std::to_string(i + 1), ind.program});
    json j = individual_to_json(ind);
    j["name"] = hof.back().name;
    hof_json.push_back(j);
  }
  write_file_atomic(run / "hall_of_fame.zcp", format_corpus(hof));
  write_file_atomic(run / "hall_of_fame.json", hof_json.dump(1) + "\n");
  const auto tested = select_test_programs(result.population, result.hall_of_fame);
  write_file_atomic(run / "test_programs.zcp", format_corpus(tested));
  fs::rename(log_partial, log_final);
  if (const auto best = result.hall_of_fame.best_fitness()) {
    std::cerr << "best fitness " << fmt_short(*best) << ": "
              << format_expression(result.hall_of_fame.entries().front().program) << "\n";
  }
  return 0;
}

// --- score --------------------------------------------------------------------

struct ScoreArgs {
  ProgramSource program;
  std::string data;
  bool top_decile = false;
  bool per_block = false;
  std::string out;
};

int cmd_score(const ScoreArgs& a) {
  const NamedProgram np = load_program(a.program);
  DatasetReader reader(a.data);
  std::ostringstream os;
  Scores scores;
  std::vector<double> accs;
  for (std::size_t i = 0; i < reader.size(); ++i) {
    const NetworkRecord r = reader.load(i);
    const ScoreResult s = score_network(np.program, r, a.per_block);
    os << r.id << '\t' << (s.score ? fmt_double(*s.score) : "fail");
    if (a.per_block) {
      for (const auto& b : s.per_block) os << '\t' << (b ? fmt_double(*b) : "fail");
    }
    os << '\n';
    scores.push_back(s.score);
    accs.push_back(r.accuracy);
  }
  const auto failures = std::count(scores.begin(), scores.end(), std::nullopt);
  os << "# n=" << scores.size() << " failures=" << failures;
  if (scores.size() >= 2) {
    const Correlation tau = kendall_tau(scores, accs);
    const Correlation rho = spearman_rho(scores, accs);
    os << " tau=" << fmt_short(tau.value) << (tau.degenerate ? "(degenerate)" : "")
       << " rho=" << fmt_short(rho.value) << (rho.degenerate ? "(degenerate)" : "");
    if (a.top_decile) {
      const auto idx = top_decile(accs);
      Scores ts;
      std::vector<double> ta;
      for (std::size_t i : idx) {
        ts.push_back(scores[i]);
        ta.push_back(accs[i]);
      }
      os << " top_decile_n=" << idx.size()
         << " top_decile_tau=" << fmt_short(kendall_tau(ts, ta).value);
    }
  }
  os << '\n';
  emit(os.str(), a.out);
  return 0;
}

// --- test ---------------------------------------------------------------------

struct TestArgs {
  std::string run;
  std::string data;
  std::string out;
  int threads = 0;
};

int cmd_test(const TestArgs& a) {
  const fs::path run(a.run);
  const json meta = json::parse(read_text_file(run / "run.json"));
  const EvolutionState state =
      state_from_json(json::parse(read_text_file(run / "checkpoint.json")));
  const auto programs = select_test_programs(state.population, state.hall_of_fame);
  const TaskDataset test = read_dataset(a.data);
  const auto ids = meta.at("evolution_ids").get<std::vector<std::string>>();
  const auto reports = test_programs(programs, ids, test, a.threads);
  std::ostringstream os;
  os << "program\tspace\ttau\trho\tn\tfailures\texpression\n";
  for (const auto& r : reports) {
    const std::string expr = format_expression(r.program);
    for (const auto& [space, tau] : r.tau) {
      os << r.name << '\t' << space << '\t' << fmt_short(tau.value) << '\t'
         << fmt_short(r.rho.at(space).value) << '\t' << test.spaces.at(space).size() << "\t-\t"
         << expr << '\n';
    }
    os << r.name << "\tall\t" << fmt_short(r.tau_all.value) << '\t' << fmt_short(r.rho_all.value)
       << '\t' << r.networks << '\t' << r.failures << '\t' << expr << '\n';
  }
  emit(os.str(), a.out);
  return 0;
}

// --- analyze ------------------------------------------------------------------

struct AnalyzeArgs {
  ProgramSource program;
  std::string config;
  std::size_t repeats = 0;
  std::string out;
  int threads = 0;
};

int cmd_analyze(const AnalyzeArgs& a) {
  RunConfig cfg = load_config(a.config);
  apply_threads(cfg, a.threads);
  const NamedProgram np = load_program(a.program);
  AnalyzeGrid grid = cfg.analyze.grid;
  grid.capture = cfg.statsgen.capture;
  const std::size_t repeats = a.repeats ? a.repeats : cfg.analyze.repeats;
  const auto points = analyze_program(np.program, grid, repeats, cfg.seed, cfg.threads);
  std::ostringstream os;
  os << "channels\tkernel\tdepth\tresolution\tmean\tstd\tmedian\trepeats\tfailures\n";
  for (const auto& p : points) {
    os << p.channels << '\t' << p.kernel << '\t' << p.depth << '\t' << p.resolution << '\t'
       << fmt_double(p.mean) << '\t' << fmt_double(p.stddev) << '\t' << fmt_double(p.median)
       << '\t' << p.repeats << '\t' << p.failures << '\n';
  }
  const std::pair<const char*, GridAxis> axes[] = {{"channels", GridAxis::kChannels},
                                                   {"kernel", GridAxis::kKernel},
                                                   {"depth", GridAxis::kDepth},
                                                   {"resolution", GridAxis::kResolution}};
  for (const auto& [label, axis] : axes) {
    os << "# median by " << label << ':';
    for (const auto& [v, m] : axis_medians(points, axis)) os << ' ' << v << '=' << fmt_short(m);
    os << '\n';
  }
  emit(os.str(), a.out);
  return 0;
}

// --- nas-search ---------------------------------------------------------------

struct NasArgs {
  ProgramSource program;
  std::string config;
  std::string out;
  int threads = 0;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int cmd_nas_search(const NasArgs& a) {
  RunConfig cfg = load_config(a.config);
  apply_threads(cfg, a.threads);
  const NamedProgram np = load_program(a.program);
  const SpaceSpec* space = &cfg.spaces.front();
  for (const auto& s : cfg.spaces) {
    if (s.name == cfg.search.space) space = &s;
  }
  AgingOptions aging = cfg.search.aging;
  aging.proxy.capture = cfg.statsgen.capture;
  aging.proxy.task = cfg.statsgen.task;

  AccuracyFn accuracy;
  std::optional<SyntheticTask> task;
  std::function<bool(const ToyArch&)> in_top;
  if (cfg.search.accuracy == AccuracySource::kParams) {
    const auto all = enumerate_space(*space);
    std::vector<std::int64_t> params;
    for (const auto& arch : all) params.push_back(arch.param_count());
    std::sort(params.rbegin(), params.rend());
    const double max_params = static_cast<double>(params.front());
    const std::int64_t cut = params[std::max<std::size_t>(1, params.size() / 100) - 1];
    accuracy = [max_params](const ToyArch& arch) {
      return static_cast<double>(arch.param_count()) / max_params;
    };
    in_top = [cut](const ToyArch& arch) { return arch.param_count() >= cut; };
  } else {
    task = make_task(cfg.statsgen.task, cfg.seed);
    accuracy = [&](const ToyArch& arch) {
      Rng rng = make_rng(cfg.seed, {fnv1a(arch.describe())});
      return train_and_label(arch, init_params(arch, rng), *task, cfg.statsgen.train, rng)
          .accuracy;
    };
  }

  std::ostringstream table;
  table << "series\trepeat\tevaluation\tbest_accuracy\n";
  std::ostringstream summary;
  for (std::size_t r = 0; r < cfg.search.repeats; ++r) {
    Rng ae_rng = make_rng(cfg.seed, {0xae, r});
    const NasRunResult ae = aging_evolution(np.program, *space, aging, accuracy, ae_rng);
    Rng rs_rng = make_rng(cfg.seed, {0x5a, r});
    const NasRunResult rs =
        random_search(&np.program, *space, aging.budget, aging.proxy, accuracy, rs_rng);
    for (const auto& [label, run] : {std::pair{"aging", &ae}, std::pair{"random", &rs}}) {
      for (std::size_t i = 0; i < run->best_accuracy.size(); ++i) {
        table << label << '\t' << r << '\t' << i + 1 << '\t' << fmt_short(run->best_accuracy[i])
              << '\n';
      }
      summary << "# " << label << " repeat=" << r
              << " best_accuracy=" << fmt_short(run->best_accuracy.back())
              << " selected=" << run->best_arch.describe();
      if (in_top) {
        const auto hit = evaluations_until(*run, in_top);
        summary << " evals_to_top1pct=" << (hit ? std::to_string(*hit) : "none");
      }
      summary << '\n';
    }
  }
  emit(table.str() + summary.str(), a.out);
  if (!a.out.empty()) std::cerr << summary.str();
  return 0;
}

// --- validate-data ------------------------------------------------------------

int cmd_validate(const std::string& dir) {
  DatasetReader reader(dir);
  std::map<std::string, std::size_t> per_space;
  std::size_t nonfinite = 0;
  for (std::size_t i = 0; i < reader.size(); ++i) {
    const NetworkRecord r = reader.load(i);
    ++per_space[r.space];
    for (const BlockStats& b : r.blocks) {
      for (int s = 0; s < kNumSlots; ++s) {
        const StatSlot slot = static_cast<StatSlot>(s);
        const Tensor& t = b[slot];
        if (!t.all_finite()) ++nonfinite;
        const StatBase base = slot_base(slot);
        if (base >= StatBase::kT1G) {
          const auto primal = static_cast<StatBase>(static_cast<int>(base) - 4);
          const auto kind = slot_input_kind(slot).value_or(InputKind::kData);
          if (t.shape() != b[make_slot(primal, kind)].shape()) {
            throw ManifestMismatch("record " + r.id + " block " +
                                   std::to_string(b.block_index) + ": " +
                                   std::string(slot_name(slot)) +
                                   " shape differs from its primal");
          }
        }
      }
    }
  }
  std::cout << "ok: " << reader.size() << " records in " << per_space.size() << " spaces";
  for (const auto& [s, n] : per_space) std::cout << "; " << s << "=" << n;
  std::cout << "\n";
  if (nonfinite) std::cout << "warning: " << nonfinite << " tensors hold inf or NaN values\n";
  return 0;
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig:
      return kExitConfig;
    case ErrorCategory::kData:
      return kExitData;
    case ErrorCategory::kNumeric:
      return kExitNumeric;
  }
  return kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zcforge: evolve zero-cost architecture scoring programs"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: ZCFORGE_THREADS or all cores)");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-stats", "generate a labelled statistics dataset");
  c_gen->add_option("--config,-c", gen.config)->required();
  c_gen->add_option("--out,-o", gen.out)->required();
  c_gen->add_option("--seed", gen.seed, "override the config seed");
  c_gen->add_option("--id-prefix", gen.id_prefix, "prefix for record ids (held-out sets)");

  EvolveArgs ev;
  auto* c_ev = app.add_subcommand("evolve", "run the evolutionary search");
  c_ev->add_option("--config,-c", ev.config)->required();
  c_ev->add_option("--data,-d", ev.data)->required();
  c_ev->add_option("--out,-o", ev.out, "run directory")->required();
  c_ev->add_flag("--resume", ev.resume, "continue from the run's checkpoint");

  ScoreArgs sc;
  auto* c_sc = app.add_subcommand("score", "score every network of a dataset");
  add_program_options(c_sc, sc.program);
  c_sc->add_option("--data,-d", sc.data)->required();
  c_sc->add_flag("--top-decile", sc.top_decile, "also report tau on the top 10% by accuracy");
  c_sc->add_flag("--per-block", sc.per_block, "print per-block scalars");
  c_sc->add_option("--out,-o", sc.out);

  TestArgs te;
  auto* c_te = app.add_subcommand("test", "evaluate a run's programs on held-out data");
  c_te->add_option("--run,-r", te.run)->required();
  c_te->add_option("--data,-d", te.data)->required();
  c_te->add_option("--out,-o", te.out);

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "score surface over an architecture grid");
  add_program_options(c_an, an.program);
  c_an->add_option("--config,-c", an.config)->required();
  c_an->add_option("--repeats", an.repeats, "draws per grid point (default from config)");
  c_an->add_option("--out,-o", an.out);

  NasArgs na;
  auto* c_na = app.add_subcommand("nas-search", "proxy-guided aging evolution");
  add_program_options(c_na, na.program);
  c_na->add_option("--config,-c", na.config)->required();
  c_na->add_option("--out,-o", na.out);

  std::string vdir;
  auto* c_va = app.add_subcommand("validate-data", "check a dataset directory");
  c_va->add_option("dir", vdir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  gen.threads = ev.threads = te.threads = an.threads = na.threads = threads;
  try {
    if (*c_gen) return cmd_gen_stats(gen);
    if (*c_ev) return cmd_evolve(ev);
    if (*c_sc) return cmd_score(sc);
    if (*c_te) return cmd_test(te);
    if (*c_an) return cmd_analyze(an);
    if (*c_na) return cmd_nas_search(na);
    if (*c_va) return cmd_validate(vdir);
  } catch (const Error& e) {
    const char* kind = e.category() == ErrorCategory::kConfig ? "config"
                       : e.category() == ErrorCategory::kData ? "data"
                                                              : "numeric";
    std::cerr << "error (" << kind << "): " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const json::exception& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error (numeric): " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
