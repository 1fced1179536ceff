#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlqaoa/env.hpp"
#include "rlqaoa/ppo.hpp"

namespace rlqaoa {

// Parse and validation failures carry a "file:line: message" prefix when a
// source location is known.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stamped into every emitted CSV so downstream parsers can guard themselves.
inline constexpr int kSchemaVersion = 1;

struct SweepAxes {
  std::vector<std::string> algorithms = {"qaoa", "pg_qaoa", "cd_qaoa",
                                         "rl_qaoa"};
  std::vector<int> n_sites = {4};
  std::vector<double> total_T = {10.0};
  std::vector<std::string> noise_kinds = {"classical"};
  std::vector<double> noise_strengths = {0.0, 0.1, 0.3};
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  bool operator==(const SweepAxes&) const = default;
};

// Desk-scale training budget; the library-level PPOHyperparams default is a
// short run, experiment configs ask for the full curve.
PPOHyperparams default_training_hyperparams();

struct ExperimentConfig {
  // [run]
  std::string algorithm = "rl_qaoa";
  std::uint64_t seed = 1;
  std::string out_dir = "runs/latest";
  int workers = 0;  // 0 -> hardware concurrency

  // [system]
  int n_sites = 4;
  double coupling = 1.0;
  double h_z = 0.4523;
  double h_x = 0.4045;
  double total_T = 10.0;
  int q = 8;
  std::vector<std::string> action_labels = {"H1", "H2", "Y", "X|Y", "Y|Z"};

  // [noise]
  std::string noise_kind = "none";
  double noise_strength = 0.0;

  // [training]
  PPOHyperparams hp = default_training_hyperparams();
  int d_h = 100;
  int n_hidden = 2;
  std::string family = "sigmoid_gaussian";
  int qaoa_restarts = 10;
  int eval_restarts = 3;        // clean duration re-solves (cd_qaoa)
  int inner_line_searches = 0;  // Powell budget per inner solve; 0 -> 6q
  double dt = 1e-3;             // adiabatic integrator step

  // [sweep]
  SweepAxes sweep;

  bool operator==(const ExperimentConfig&) const = default;
};

// Name <-> enum maps; parsers throw ConfigError on unknown names.
NoiseKind parse_noise_kind(const std::string& name);
std::string noise_kind_name(NoiseKind kind);
ContinuousFamily parse_family(const std::string& name);
std::string family_name(ContinuousFamily family);

// INI-style text: [section] headers, `key = value` lines, full-line comments
// starting with '#' or ';'.  Lists are comma-separated.  Unknown sections,
// unknown keys, duplicate keys and malformed values are reported with the
// offending line number.  Parsing does not validate ranges; callers follow
// up with validate_config.
ExperimentConfig parse_config(std::istream& in,
                              const std::string& filename = "<config>");
ExperimentConfig parse_config_string(const std::string& text,
                                     const std::string& filename = "<config>");
ExperimentConfig load_config_file(const std::string& path);

// Emits every field in a fixed order; parse_config_string o serialize_config
// is the identity (numbers are printed in shortest round-trip form).
std::string serialize_config(const ExperimentConfig& cfg);

// "section.key=value" (or bare "key=value" when the key names a single
// field) applied on top of a parsed config.
void apply_override(ExperimentConfig& cfg, const std::string& spec);

// Range and enum checks shared by every subcommand.
void validate_config(const ExperimentConfig& cfg);

EnvConfig make_env_config(const ExperimentConfig& cfg);

}  // namespace rlqaoa
