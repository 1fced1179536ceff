#pragma once

#include <random>
#include <string>
#include <vector>

#include "rlqaoa/policy.hpp"
#include "rlqaoa/quantum.hpp"

namespace rlqaoa {

enum class NoiseKind { none, classical_gaussian, quantum, gate_rotation };

struct NoiseConfig {
  NoiseKind kind = NoiseKind::none;
  // Dimensionless fraction: of |E_GS|/N for classical_gaussian, of the mean
  // gate duration T/q for gate_rotation; ignored for none and quantum.
  double strength = 0.0;
};

struct EnvConfig {
  IsingParams ising;
  double total_T = 10.0;
  int q = 8;
  std::vector<std::string> action_labels = {"H1", "H2", "Y", "X|Y", "Y|Z"};
  NoiseConfig noise;
};

struct Reward {
  double noisy_return = 0.0;        // -(energy density + reward noise)
  double clean_return = 0.0;        // -energy density, noise-free
  double clean_energy_ratio = 0.0;  // E / E_GS (energy densities)
};

// Scales raw fractions in (0,1) so the durations sum to T exactly; the last
// element absorbs the rounding residual.  Order preserved.
std::vector<double> normalize_durations(const std::vector<double>& raw,
                                        double T);

class Environment {
 public:
  explicit Environment(const EnvConfig& cfg);

  const EnvConfig& config() const { return cfg_; }
  const GeneratorSet& action_set() const { return actions_; }
  const IsingOperators& hamiltonians() const { return ops_; }
  double ground_energy() const { return gs_energy_; }
  double ground_energy_density() const { return gs_density_; }

  // Discrete indices + normalized continuous durations -> physical protocol.
  Protocol build_protocol(const std::vector<HybridAction>& actions) const;
  QuantumState run_protocol(const Protocol& protocol) const;

  // Evolves the all-up state under the trajectory's protocol and returns the
  // return with fresh reward/gate noise drawn from `noise_rng`.
  Reward rollout(const Trajectory& traj, std::mt19937_64& noise_rng) const;

  // Noise-free evaluation (noisy_return == clean_return).
  Reward evaluate(const std::vector<HybridAction>& actions) const;
  Reward evaluate_greedy(const AutoregressivePolicy& policy) const;

  // Std-dev energy density of the clean final state (the quantum-noise scale).
  double evaluate_variance(const std::vector<HybridAction>& actions) const;

 private:
  void validate_actions(const std::vector<HybridAction>& actions) const;

  EnvConfig cfg_;
  GeneratorSet actions_;
  IsingOperators ops_;
  QuantumState initial_;
  double gs_energy_ = 0.0;
  double gs_density_ = 0.0;
};

}  // namespace rlqaoa
