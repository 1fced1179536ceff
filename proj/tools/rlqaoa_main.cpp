// Experiment driver: train / sweep / adiabatic-scan / evaluate / verify.
// Data artifacts go to the output directory (or stdout for evaluate and
// verify); progress lines go to stderr, gated by RLQAOA_LOG
// (quiet | info | debug, default info).
// Exit codes: 0 ok, 1 config error, 2 run failure, 3 verification failure.

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlqaoa/baselines.hpp"
#include "rlqaoa/config.hpp"
#include "rlqaoa/env.hpp"
#include "rlqaoa/policy.hpp"
#include "rlqaoa/ppo.hpp"
#include "rlqaoa/quantum.hpp"
#include "rlqaoa/verify.hpp"

#ifndef RLQAOA_GIT_HASH
#define RLQAOA_GIT_HASH "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace rlqaoa;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* v = std::getenv("RLQAOA_LOG");
    std::string s = v ? v : "info";
    if (s == "quiet") return LogLevel::quiet;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::info;
  }();
  return level;
}

std::mutex log_mu;

void log_line(LogLevel at, const std::string& msg) {
  if (static_cast<int>(log_level()) < static_cast<int>(at)) return;
  std::lock_guard<std::mutex> lock(log_mu);
  std::cerr << msg << "\n";
}

// Shortest round-trip formatting, matching the config serializer, so CSV
// numbers re-read bit-exactly.
std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 0;
  std::vector<std::string> overrides;
  CLI::Option* config_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
  c.config_opt =
      sub->add_option("--config", c.config, "experiment config file (INI)");
  c.seed_opt = sub->add_option("--seed", c.seed, "master seed override");
  c.out_opt = sub->add_option("--out", c.out, "output directory override");
  c.workers_opt = sub->add_option("--workers", c.workers,
                                  "sweep worker threads (0 = all cores)");
  sub->add_option("--override", c.overrides,
                  "config override, section.key=value or key=value")
      ->allow_extra_args(false);
}

// File, then --override in order, then the dedicated flags.
ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg;
  if (c.config_opt->count()) cfg = load_config_file(c.config);
  for (const std::string& ov : c.overrides) apply_override(cfg, ov);
  if (c.seed_opt->count()) cfg.seed = c.seed;
  if (c.out_opt->count()) cfg.out_dir = c.out;
  if (c.workers_opt->count()) cfg.workers = c.workers;
  validate_config(cfg);
  return cfg;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f.good()) throw std::runtime_error("short write to " + path.string());
}

using LabeledProtocol = std::vector<std::pair<std::string, double>>;

LabeledProtocol label_protocol(const std::vector<std::string>& labels,
                               const std::vector<int>& sequence,
                               const std::vector<double>& durations) {
  LabeledProtocol out;
  for (std::size_t j = 0; j < sequence.size(); ++j)
    out.emplace_back(labels.at(static_cast<std::size_t>(sequence[j])),
                     durations.at(j));
  return out;
}

IterationStats single_row(double clean_ratio, double noisy_return) {
  IterationStats s;
  s.mean_clean_ratio = clean_ratio;
  s.max_clean_ratio = clean_ratio;
  s.best_clean_ratio = clean_ratio;
  s.mean_noisy_return = noisy_return;
  s.greedy_ratio = clean_ratio;
  return s;
}

struct RunOutput {
  double best_clean_ratio = 0.0;
  LabeledProtocol protocol;
  double wall_s = 0.0;
  bool has_checkpoint = false;
};

ordered_json summary_json(const ExperimentConfig& cfg, const RunOutput& out) {
  ordered_json proto = ordered_json::array();
  for (const auto& [label, duration] : out.protocol)
    proto.push_back({{"label", label}, {"duration", duration}});
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["algorithm"] = cfg.algorithm;
  j["n_sites"] = cfg.n_sites;
  j["total_T"] = cfg.total_T;
  j["noise_kind"] = cfg.noise_kind;
  j["noise_strength"] = cfg.noise_strength;
  j["seed"] = cfg.seed;
  j["best_clean_ratio"] = out.best_clean_ratio;
  j["best_protocol"] = proto;
  j["wall_s"] = out.wall_s;
  j["git_hash"] = RLQAOA_GIT_HASH;
  j["config"] = serialize_config(cfg);
  return j;
}

// Runs one algorithm into `dir`: config.ini, train_log.csv, checkpoint_best
// for the policy algorithms, then summary.json last (its presence marks the
// cell complete for sweep resumption).
RunOutput run_algorithm(const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "config.ini", serialize_config(cfg));
  const EnvConfig ecfg = make_env_config(cfg);
  RunOutput out;
  std::vector<IterationStats> history;
  const auto t0 = std::chrono::steady_clock::now();

  if (cfg.algorithm == "rl_qaoa") {
    TrainOptions opt;
    opt.d_h = cfg.d_h;
    opt.n_hidden = cfg.n_hidden;
    opt.family = parse_family(cfg.family);
    opt.checkpoint_path = (dir / "checkpoint_best").string();
    TrainResult res = train_rl_qaoa(ecfg, cfg.hp, opt, cfg.seed);
    history = std::move(res.history);
    out.best_clean_ratio = res.best_greedy_ratio;
    Environment env(ecfg);
    Protocol proto = env.build_protocol(res.best_greedy_actions);
    for (const ProtocolStep& s : proto.steps)
      out.protocol.emplace_back(
          ecfg.action_labels.at(static_cast<std::size_t>(s.generator)),
          s.duration);
    out.has_checkpoint = true;
  } else if (cfg.algorithm == "cd_qaoa") {
    CDQAOAOptions opt;
    opt.d_h = cfg.d_h;
    opt.n_hidden = cfg.n_hidden;
    opt.inner.max_line_searches = cfg.inner_line_searches;
    opt.eval_restarts = cfg.eval_restarts;
    opt.checkpoint_path = (dir / "checkpoint_best").string();
    CDQAOAResult res = cd_qaoa_train(ecfg, cfg.hp, opt, cfg.seed);
    history = std::move(res.train.history);
    out.best_clean_ratio = res.best_clean_ratio;
    out.protocol = label_protocol(ecfg.action_labels, res.best_sequence,
                                  res.best_durations);
    out.has_checkpoint = true;
  } else if (cfg.algorithm == "pg_qaoa") {
    PGQAOAResult res =
        pg_qaoa_train(ecfg, cfg.hp, parse_family(cfg.family), cfg.seed);
    history = std::move(res.history);
    out.best_clean_ratio = res.best_greedy_ratio;
    out.protocol = label_protocol({"H1", "H2"}, res.sequence,
                                  res.best_greedy_durations);
  } else if (cfg.algorithm == "qaoa") {
    QAOAResult res =
        qaoa_optimize(ecfg, cfg.q / 2, cfg.qaoa_restarts, cfg.seed);
    out.best_clean_ratio = res.clean_ratio;
    out.protocol = label_protocol({"H1", "H2"}, res.sequence, res.durations);
    history.push_back(single_row(res.clean_ratio, res.noisy_objective));
  } else {  // adiabatic
    QuantumState psi = adiabatic_evolve(ecfg.ising, ecfg.total_T, cfg.dt);
    Environment env(ecfg);
    double e = energy_density(psi, env.hamiltonians().h, ecfg.ising.n_sites);
    out.best_clean_ratio = e / env.ground_energy_density();
    history.push_back(single_row(out.best_clean_ratio, -e));
  }

  out.wall_s = seconds_since(t0);
  {
    std::ofstream f(dir / "train_log.csv");
    if (!f) throw std::runtime_error("cannot write train_log.csv");
    write_training_log(f, history, cfg.algorithm);
  }
  write_text_file(dir / "summary.json", summary_json(cfg, out).dump(2) + "\n");
  return out;
}

std::string run_banner(const ExperimentConfig& cfg) {
  return cfg.algorithm + " N=" + std::to_string(cfg.n_sites) +
         " T=" + shortest(cfg.total_T) + " noise=" + cfg.noise_kind +
         " g=" + shortest(cfg.noise_strength) +
         " seed=" + std::to_string(cfg.seed);
}

int cmd_train(const ExperimentConfig& cfg) {
  log_line(LogLevel::info, "train: " + run_banner(cfg) +
                               " iters=" + std::to_string(cfg.hp.total_iters));
  log_line(LogLevel::debug, serialize_config(cfg));
  RunOutput out = run_algorithm(cfg, cfg.out_dir);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "train: best clean ratio %.6f in %.1fs, outputs in %s",
                out.best_clean_ratio, out.wall_s, cfg.out_dir.c_str());
  log_line(LogLevel::info, buf);
  return 0;
}

struct SweepCell {
  ExperimentConfig cfg;
  std::string name;
};

std::vector<SweepCell> make_cells(const ExperimentConfig& base) {
  const SweepAxes& ax = base.sweep;
  std::vector<SweepCell> cells;
  for (const std::string& alg : ax.algorithms)
    for (int n : ax.n_sites)
      for (double T : ax.total_T)
        for (const std::string& kind : ax.noise_kinds)
          for (double g : ax.noise_strengths)
            for (std::uint64_t s : ax.seeds) {
              SweepCell cell;
              cell.cfg = base;
              cell.cfg.algorithm = alg;
              cell.cfg.n_sites = n;
              cell.cfg.total_T = T;
              cell.cfg.noise_kind = kind;
              cell.cfg.noise_strength = g;
              cell.cfg.seed = s;
              cell.name = alg + "_N" + std::to_string(n) + "_T" +
                          shortest(T) + "_" + kind + "_g" + shortest(g) +
                          "_s" + std::to_string(s);
              cell.cfg.out_dir =
                  (fs::path(base.out_dir) / "cells" / cell.name).string();
              cells.push_back(std::move(cell));
            }
  return cells;
}

std::optional<double> completed_ratio(const fs::path& summary_path) {
  std::ifstream f(summary_path);
  if (!f) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(f);
    if (!j.contains("best_clean_ratio") || !j["best_clean_ratio"].is_number())
      return std::nullopt;
    return j["best_clean_ratio"].get<double>();
  } catch (...) {
    return std::nullopt;
  }
}

int cmd_sweep(const ExperimentConfig& base) {
  const SweepAxes& ax = base.sweep;
  if (ax.algorithms.empty() || ax.n_sites.empty() || ax.total_T.empty() ||
      ax.noise_kinds.empty() || ax.noise_strengths.empty() ||
      ax.seeds.empty())
    throw ConfigError("every sweep axis needs at least one value");

  std::vector<SweepCell> cells = make_cells(base);
  fs::create_directories(base.out_dir);
  write_text_file(fs::path(base.out_dir) / "config.ini",
                  serialize_config(base));

  struct Row {
    bool ok = false;
    double ratio = 0.0;
    std::string error;
  };
  std::vector<Row> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> finished{0};
  const int total = static_cast<int>(cells.size());

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const SweepCell& cell = cells[i];
      const fs::path cell_dir(cell.cfg.out_dir);
      char buf[320];
      try {
        if (auto cached = completed_ratio(cell_dir / "summary.json")) {
          rows[i] = {true, *cached, ""};
          std::snprintf(buf, sizeof buf, "[%d/%d] %s: ratio=%.6f (cached)",
                        finished.fetch_add(1) + 1, total, cell.name.c_str(),
                        *cached);
          log_line(LogLevel::info, buf);
          continue;
        }
        RunOutput out = run_algorithm(cell.cfg, cell_dir);
        rows[i] = {true, out.best_clean_ratio, ""};
        std::error_code ec;
        fs::remove(cell_dir / "error.txt", ec);
        std::snprintf(buf, sizeof buf, "[%d/%d] %s: ratio=%.6f (%.1fs)",
                      finished.fetch_add(1) + 1, total, cell.name.c_str(),
                      out.best_clean_ratio, out.wall_s);
        log_line(LogLevel::info, buf);
      } catch (const std::exception& e) {
        rows[i] = {false, 0.0, e.what()};
        try {
          fs::create_directories(cell_dir);
          write_text_file(cell_dir / "error.txt", std::string(e.what()) + "\n");
        } catch (...) {
        }
        std::snprintf(buf, sizeof buf, "[%d/%d] %s: FAILED: %s",
                      finished.fetch_add(1) + 1, total, cell.name.c_str(),
                      e.what());
        log_line(LogLevel::info, buf);
      }
    }
  };

  int n_workers = base.workers > 0
                      ? base.workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min(n_workers, total));
  log_line(LogLevel::info, "sweep: " + std::to_string(total) + " cells, " +
                               std::to_string(n_workers) + " workers");
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  // Rebuilt from scratch every run, in cell order, so resumption never
  // duplicates rows.
  std::ofstream f(fs::path(base.out_dir) / "results.csv");
  if (!f) throw std::runtime_error("cannot write results.csv");
  f << "schema_version,algorithm,n_sites,total_T,noise_kind,noise_strength,"
       "seed,status,best_clean_ratio\n";
  int failures = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const ExperimentConfig& c = cells[i].cfg;
    f << kSchemaVersion << ',' << c.algorithm << ',' << c.n_sites << ','
      << shortest(c.total_T) << ',' << c.noise_kind << ','
      << shortest(c.noise_strength) << ',' << c.seed << ','
      << (rows[i].ok ? "ok" : "failed") << ','
      << (rows[i].ok ? shortest(rows[i].ratio) : "") << '\n';
    failures += rows[i].ok ? 0 : 1;
  }
  f.close();
  log_line(LogLevel::info,
           "sweep: wrote " + (fs::path(base.out_dir) / "results.csv").string());
  if (failures > 0) {
    std::cerr << "sweep: " << failures << " of " << total
              << " cells failed; see error.txt in the cell directories\n";
    return 2;
  }
  return 0;
}

int cmd_adiabatic_scan(const ExperimentConfig& cfg) {
  if (cfg.sweep.total_T.empty())
    throw ConfigError("adiabatic-scan needs sweep.total_t values");
  fs::create_directories(cfg.out_dir);
  write_text_file(fs::path(cfg.out_dir) / "config.ini",
                  serialize_config(cfg));

  struct ScanRow {
    double T;
    std::string algorithm;
    double ratio;
  };
  std::vector<ScanRow> rows;
  for (double T : cfg.sweep.total_T) {
    ExperimentConfig point = cfg;
    point.total_T = T;
    const EnvConfig ecfg = make_env_config(point);
    Environment env(ecfg);

    QuantumState psi = adiabatic_evolve(ecfg.ising, T, cfg.dt);
    double e = energy_density(psi, env.hamiltonians().h, ecfg.ising.n_sites);
    rows.push_back({T, "adiabatic", e / env.ground_energy_density()});

    QAOAResult qr = qaoa_optimize(ecfg, cfg.q / 2, cfg.qaoa_restarts,
                                  cfg.seed);
    rows.push_back({T, "qaoa", qr.clean_ratio});

    CDQAOAOptions opt;
    opt.d_h = cfg.d_h;
    opt.n_hidden = cfg.n_hidden;
    opt.inner.max_line_searches = cfg.inner_line_searches;
    opt.eval_restarts = cfg.eval_restarts;
    CDQAOAResult cr = cd_qaoa_train(ecfg, cfg.hp, opt, cfg.seed);
    rows.push_back({T, "cd_qaoa", cr.best_clean_ratio});

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "scan: T=%s adiabatic=%.6f qaoa=%.6f cd_qaoa=%.6f",
                  shortest(T).c_str(), rows[rows.size() - 3].ratio,
                  rows[rows.size() - 2].ratio, rows[rows.size() - 1].ratio);
    log_line(LogLevel::info, buf);
  }

  const fs::path csv = fs::path(cfg.out_dir) / "adiabatic_scan.csv";
  std::ofstream f(csv);
  if (!f) throw std::runtime_error("cannot write adiabatic_scan.csv");
  f << "schema_version,total_T,algorithm,clean_ratio\n";
  for (const ScanRow& r : rows)
    f << kSchemaVersion << ',' << shortest(r.T) << ',' << r.algorithm << ','
      << shortest(r.ratio) << '\n';
  f.close();
  log_line(LogLevel::info, "scan: wrote " + csv.string());
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
  if (cfg.algorithm != "rl_qaoa" && cfg.algorithm != "cd_qaoa")
    throw ConfigError(
        "evaluate needs a checkpointed policy algorithm (rl_qaoa or "
        "cd_qaoa), got '" +
        cfg.algorithm + "'");
  const fs::path ck = fs::path(cfg.out_dir) / "checkpoint_best";
  if (!fs::exists(ck))
    throw std::runtime_error("checkpoint not found: " + ck.string());
  Checkpoint c = load_checkpoint(ck.string());

  const EnvConfig ecfg = make_env_config(cfg);
  if (c.dims.q != ecfg.q ||
      c.dims.n_actions != static_cast<int>(ecfg.action_labels.size()))
    throw std::runtime_error("checkpoint dims do not match the config");
  Environment env(ecfg);
  AutoregressivePolicy policy(c.dims, 0);
  policy.params() = c.params;

  const std::vector<HybridAction> actions = policy.greedy_actions();
  LabeledProtocol protocol;
  double ratio = 0.0;
  if (cfg.algorithm == "cd_qaoa") {
    // Mirror cd_qaoa's own evaluation: greedy sequence, clean Powell solve.
    std::vector<int> seq;
    for (const HybridAction& a : actions) seq.push_back(a.discrete);
    SequenceSolve sol =
        solve_sequence_durations(env, seq, cfg.eval_restarts, cfg.seed);
    ratio = sol.clean_ratio;
    protocol = label_protocol(ecfg.action_labels, seq, sol.durations);
  } else {
    Reward r = env.evaluate(actions);
    ratio = r.clean_energy_ratio;
    Protocol proto = env.build_protocol(actions);
    for (const ProtocolStep& s : proto.steps)
      protocol.emplace_back(
          ecfg.action_labels.at(static_cast<std::size_t>(s.generator)),
          s.duration);
  }

  ordered_json proto = ordered_json::array();
  for (const auto& [label, duration] : protocol)
    proto.push_back({{"label", label}, {"duration", duration}});
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["algorithm"] = cfg.algorithm;
  j["checkpoint"] = ck.string();
  j["checkpoint_iteration"] = c.iteration;
  j["greedy_clean_ratio"] = ratio;
  j["greedy_protocol"] = proto;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ground-state protocol search on the nonintegrable Ising chain"};
  app.require_subcommand(1);

  Common ct, cs, ca, ce;
  CLI::App* train = app.add_subcommand(
      "train", "train one algorithm; writes log, checkpoint and summary");
  add_common(train, ct);
  CLI::App* sweep = app.add_subcommand(
      "sweep", "cross-product sweep over the [sweep] axes with a worker pool");
  add_common(sweep, cs);
  CLI::App* scan = app.add_subcommand(
      "adiabatic-scan",
      "adiabatic vs qaoa vs cd_qaoa across sweep.total_t durations");
  add_common(scan, ca);
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "load a checkpoint and report greedy metrics as JSON");
  add_common(evaluate, ce);

  CLI::App* verify =
      app.add_subcommand("verify", "run the library self-check suite");
  std::uint64_t vseed = 0;
  bool inject = false;
  CLI::Option* vseed_opt =
      verify->add_option("--seed", vseed, "verification seed");
  verify->add_flag("--inject-mask-fault", inject,
                   "corrupt a policy mask first, proving the suite can fail");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (verify->parsed()) {
      VerifyOptions opt;
      if (vseed_opt->count()) opt.seed = vseed;
      opt.inject_mask_fault = inject;
      return print_verification(std::cout, run_verification(opt)) ? 0 : 3;
    }
    const Common& c = train->parsed()  ? ct
                      : sweep->parsed() ? cs
                      : scan->parsed()  ? ca
                                        : ce;
    const ExperimentConfig cfg = resolve_config(c);
    if (train->parsed()) return cmd_train(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (scan->parsed()) return cmd_adiabatic_scan(cfg);
    return cmd_evaluate(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
