#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rlqaoa/env.hpp"
#include "rlqaoa/ppo.hpp"

namespace rlqaoa {

struct PowellConfig {
  double x_tol = 1e-6;
  double f_tol = 1e-8;
  int max_line_searches = 0;  // 0 -> 200 * dim
  double lower = 0.0;         // box, same for every coordinate
  double upper = 1.0;
};

struct PowellResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int sweeps = 0;         // completed direction-set sweeps
  long long evals = 0;    // objective evaluations
  bool converged = true;  // false when the line-search budget stopped it
};

// Powell's conjugate-direction method on a box, derivative-free Brent line
// minimization on the feasible segment, 1964 direction-replacement rule.
// Minimizes f; points are only accepted on strict decrease.
PowellResult powell_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const PowellConfig& cfg = {});

struct QAOAResult {
  std::vector<int> sequence;      // indices into the two-generator set
  std::vector<double> durations;  // normalized, sum = total_T
  double clean_ratio = 0.0;       // E/E_GS of the returned protocol
  double noisy_objective = 0.0;   // best noisy return seen by the solver
  long long evals = 0;
};

// Plain QAOA: alternating (H1, H2) sequence of depth p (2p steps), Powell
// over the raw durations in [0,1]^2p with normalization inside the
// objective.  Both phase orderings are solved; the better clean ratio wins.
// Under noise the solver sees the noisy objective directly.
QAOAResult qaoa_optimize(const EnvConfig& cfg, int p_depth, int restarts,
                         std::uint64_t seed, const PowellConfig& powell = {});

struct PGQAOAResult {
  std::vector<IterationStats> history;
  std::vector<int> sequence;    // fixed alternation used throughout
  Eigen::VectorXd kappa_raw;    // final per-step distribution parameters
  Eigen::VectorXd xi_raw;
  double best_greedy_ratio = 0.0;
  std::vector<double> best_greedy_durations;  // normalized
  double best_sampled_ratio = 0.0;
  double total_wall_ms = 0.0;
};

// Policy-gradient QAOA: a bare 2q-parameter vector (per-step kappa, xi in
// raw form) over a fixed alternating sequence, REINFORCE with the EMA
// baseline and the shared batch/annealing defaults.  No network, no clip.
PGQAOAResult pg_qaoa_train(const EnvConfig& cfg, const PPOHyperparams& hp,
                           ContinuousFamily family, std::uint64_t seed);

struct CDQAOAOptions {
  int d_h = 100;
  int n_hidden = 2;
  // Per-sample duration solve.  Loose tolerances plus a hard line-search
  // budget (0 -> 6*q) keep the inner loop fast and bounded under reward
  // noise, where a stochastic objective never triggers the f_tol test.
  PowellConfig inner{1e-4, 1e-7, 0};
  int eval_restarts = 3;  // greedy-sequence duration solve (noisy objective)
  std::string checkpoint_path;
};

struct CDQAOAResult {
  TrainResult train;
  std::vector<int> best_sequence;
  std::vector<double> best_durations;  // normalized, from the final solve
  double best_clean_ratio = 0.0;
};

// CD-QAOA: discrete-only PPO over generator sequences; every sampled
// sequence's durations are solved by Powell (warm-started from the sampled
// raws), and the reward is a fresh noisy rollout of the solved protocol.
CDQAOAResult cd_qaoa_train(const EnvConfig& cfg, const PPOHyperparams& hp,
                           const CDQAOAOptions& opt, std::uint64_t seed);

// Clean Powell solve of the durations for a fixed sequence; multi-restart,
// deterministic in `seed`.  Returns the clean ratio and the raw minimizer.
struct SequenceSolve {
  std::vector<double> raw;        // in [0,1]^q
  std::vector<double> durations;  // normalized
  double clean_ratio = 0.0;
};
SequenceSolve solve_sequence_durations(const Environment& env,
                                       const std::vector<int>& sequence,
                                       int restarts, std::uint64_t seed,
                                       const PowellConfig& powell = {});

// Duration solve for a fixed sequence where the optimizer sees the
// environment's noisy objective, as it would in an experiment: restarts are
// compared by their noisy best, and only the returned metric is the clean
// evaluation of the winning protocol.  CD-QAOA's greedy evaluation and its
// reported best protocol both go through here; with NoiseKind::none it is
// an ordinary clean solve.  Deterministic in `seed`.
SequenceSolve solve_sequence_durations_noisy(const Environment& env,
                                             const std::vector<int>& sequence,
                                             int restarts, std::uint64_t seed,
                                             const PowellConfig& powell);

struct GridOracleResult {
  std::vector<double> raw;  // best grid point
  double clean_ratio = 0.0;
  long long evals = 0;
};

// Exhaustive normalized-duration grid search for a fixed sequence;
// grid_points^q evaluations, budget-capped at 1e7.
GridOracleResult grid_oracle(const EnvConfig& cfg,
                             const std::vector<int>& sequence,
                             int grid_points);

}  // namespace rlqaoa
