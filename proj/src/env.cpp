#include "rlqaoa/env.hpp"

#include <cmath>
#include <stdexcept>

namespace rlqaoa {

std::vector<double> normalize_durations(const std::vector<double>& raw,
                                        double T) {
  if (raw.empty()) throw std::invalid_argument("empty duration list");
  if (!(T > 0.0)) throw std::invalid_argument("total time must be positive");
  double sum = 0.0;
  for (double r : raw) {
    if (!(r > 0.0))
      throw std::invalid_argument("raw durations must be positive");
    sum += r;
  }
  if (sum < 1e-9) throw std::domain_error("degenerate raw durations");
  std::vector<double> out(raw.size());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
    out[i] = raw[i] * T / sum;
    acc += out[i];
  }
  out.back() = T - acc;
  return out;
}

Environment::Environment(const EnvConfig& cfg) : cfg_(cfg) {
  if (cfg_.q < 1) throw std::invalid_argument("q must be >= 1");
  if (!(cfg_.total_T > 0.0))
    throw std::invalid_argument("total_T must be positive");
  if (cfg_.noise.strength < 0.0)
    throw std::invalid_argument("noise strength must be nonnegative");
  if (cfg_.action_labels.empty())
    throw std::invalid_argument("action set is empty");
  actions_ = make_action_set(cfg_.ising, cfg_.action_labels);
  ops_ = build_ising(cfg_.ising);
  initial_ = QuantumState::all_up(cfg_.ising.n_sites);
  GroundState gs = ground_state(ops_.h, cfg_.ising.n_sites);
  gs_energy_ = gs.energy;
  gs_density_ = gs.energy / cfg_.ising.n_sites;
}

void Environment::validate_actions(
    const std::vector<HybridAction>& actions) const {
  if (static_cast<int>(actions.size()) != cfg_.q)
    throw std::invalid_argument("trajectory length mismatch");
  for (std::size_t j = 0; j < actions.size(); ++j) {
    if (actions[j].discrete < 0 || actions[j].discrete >= actions_.size())
      throw std::invalid_argument("discrete action index out of range");
    if (j > 0 && actions[j].discrete == actions[j - 1].discrete)
      throw std::invalid_argument("consecutive repeated generator");
  }
}

Protocol Environment::build_protocol(
    const std::vector<HybridAction>& actions) const {
  validate_actions(actions);
  std::vector<double> raw(actions.size());
  for (std::size_t j = 0; j < actions.size(); ++j)
    raw[j] = actions[j].continuous;
  std::vector<double> durations = normalize_durations(raw, cfg_.total_T);
  Protocol protocol;
  protocol.total_T = cfg_.total_T;
  protocol.steps.reserve(actions.size());
  for (std::size_t j = 0; j < actions.size(); ++j)
    protocol.steps.push_back({actions[j].discrete, durations[j]});
  return protocol;
}

QuantumState Environment::run_protocol(const Protocol& protocol) const {
  return apply_protocol(initial_, protocol, actions_);
}

Reward Environment::rollout(const Trajectory& traj,
                            std::mt19937_64& noise_rng) const {
  Protocol protocol = build_protocol(traj.actions);
  QuantumState clean_state = run_protocol(protocol);
  const int n = cfg_.ising.n_sites;
  double e_clean = energy_density(clean_state, ops_.h, n);

  Reward r;
  r.clean_return = -e_clean;
  r.clean_energy_ratio = e_clean / gs_density_;
  switch (cfg_.noise.kind) {
    case NoiseKind::none:
      r.noisy_return = r.clean_return;
      break;
    case NoiseKind::classical_gaussian: {
      double sigma = cfg_.noise.strength * std::abs(gs_density_);
      std::normal_distribution<double> gauss(0.0, 1.0);
      r.noisy_return = -(e_clean + sigma * gauss(noise_rng));
      break;
    }
    case NoiseKind::quantum: {
      double sigma = energy_variance_density(clean_state, ops_.h, n);
      std::normal_distribution<double> gauss(0.0, 1.0);
      r.noisy_return = -(e_clean + sigma * gauss(noise_rng));
      break;
    }
    case NoiseKind::gate_rotation: {
      double sigma = cfg_.noise.strength * cfg_.total_T / cfg_.q;
      std::normal_distribution<double> gauss(0.0, 1.0);
      Protocol noisy = protocol;
      for (auto& step : noisy.steps) step.duration += sigma * gauss(noise_rng);
      QuantumState noisy_state = run_protocol(noisy);
      r.noisy_return = -energy_density(noisy_state, ops_.h, n);
      break;
    }
  }
  return r;
}

Reward Environment::evaluate(const std::vector<HybridAction>& actions) const {
  QuantumState state = run_protocol(build_protocol(actions));
  const int n = cfg_.ising.n_sites;
  double e = energy_density(state, ops_.h, n);
  Reward r;
  r.clean_return = -e;
  r.noisy_return = r.clean_return;
  r.clean_energy_ratio = e / gs_density_;
  return r;
}

Reward Environment::evaluate_greedy(const AutoregressivePolicy& policy) const {
  if (policy.dims().q != cfg_.q ||
      policy.dims().n_actions != actions_.size())
    throw std::invalid_argument("policy dimensions do not match environment");
  return evaluate(policy.greedy_actions());
}

double Environment::evaluate_variance(
    const std::vector<HybridAction>& actions) const {
  QuantumState state = run_protocol(build_protocol(actions));
  return energy_variance_density(state, ops_.h, cfg_.ising.n_sites);
}

}  // namespace rlqaoa
