#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rlqaoa/env.hpp"
#include "rlqaoa/policy.hpp"

namespace rlqaoa {

struct PPOHyperparams {
  int batch_size = 128;
  double lr = 5e-4;
  double lr_decay = 0.98;
  int lr_decay_every = 50;  // staircase
  double eps_c = 0.1;       // continuous clip radius
  double eps_d = 0.001;     // discrete clip radius
  int ppo_epochs = 4;
  double ema = 0.95;
  double entropy_temp = 0.1;
  double temp_decay = 0.99;
  int temp_decay_every = 50;  // smooth: decay^(iter/every)
  int total_iters = 500;
  double grad_clip = 0.0;  // global L2 threshold; 0 disables

  bool operator==(const PPOHyperparams&) const = default;
};

void validate_hyperparams(const PPOHyperparams& hp);
double staircase_lr(int iter, const PPOHyperparams& hp);
double smooth_temp(int iter, const PPOHyperparams& hp);

struct BaselineEMA {
  double value = 0.0;
  double m = 0.95;
  void update(double batch_mean) {
    value = m * value + (1.0 - m) * batch_mean;
  }
};

// A_k = R_k - baseline, using the baseline value from before this batch;
// the baseline is then EMA-updated with the batch mean.
Eigen::VectorXd compute_advantages(const Eigen::VectorXd& returns,
                                   BaselineEMA& baseline);

// exp(lp_new - lp_old) with the exponent clamped to [-20, 20].
double importance_ratio(double lp_new, double lp_old);

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A).
double clipped_term(double ratio, double advantage, double eps);

// d(clipped term)/d(lp_new): ratio * A on the unclipped branch, zero when
// the clip binds or the exponent clamp saturates.
double clipped_term_dlogp(double lp_new, double lp_old, double advantage,
                          double eps);

struct HybridObjective {
  double value = 0.0;        // surrogate_d + surrogate_c + entropy term
  double surrogate_d = 0.0;  // batch means, for diagnostics
  double surrogate_c = 0.0;
  double entropy_term = 0.0;   // temp * mean_entropy
  double mean_entropy = 0.0;   // batch mean of per-trajectory summed entropy
  double kl_d = 0.0;  // mean(lp_old - lp_new), diagnostic only
  double kl_c = 0.0;
  ParamSet grads;
};

// Two-clip surrogate over whole-trajectory ratios plus the exact discrete
// entropy weighted by `entropy_temp`; advantages are shared between the
// discrete and continuous terms.  With train_continuous=false the continuous
// surrogate is dropped and its heads receive no gradient.
HybridObjective hybrid_objective(const AutoregressivePolicy& policy,
                                 const BatchActivations& acts,
                                 const std::vector<Trajectory>& batch,
                                 const Eigen::VectorXd& lpd_old,
                                 const Eigen::VectorXd& lpc_old,
                                 const Eigen::VectorXd& advantages,
                                 double eps_d, double eps_c,
                                 double entropy_temp,
                                 bool train_continuous = true);

double global_norm(const ParamSet& g);
void clip_global_norm(ParamSet& g, double max_norm);

struct IterationStats {
  int iter = 0;
  double lr = 0.0;
  double temp = 0.0;
  double mean_clean_ratio = 0.0;
  double max_clean_ratio = 0.0;
  double best_clean_ratio = 0.0;  // running max of max_clean_ratio
  double mean_noisy_return = 0.0;
  double discrete_entropy = 0.0;  // batch mean of per-trajectory entropy
  double kl = 0.0;                // kl_d + kl_c after the last inner epoch
  double greedy_ratio = 0.0;
  double wall_ms = 0.0;  // kept out of the deterministic CSV
};

struct TrainOptions {
  int d_h = 100;
  int n_hidden = 2;
  ContinuousFamily family = ContinuousFamily::sigmoid_gaussian;
  bool train_continuous = true;
  // Overrides the environment reward for a sampled trajectory (CD-QAOA plugs
  // its Powell inner solve in here).  Default: Environment::rollout with a
  // per-(iteration, trajectory) noise stream.
  std::function<Reward(const Trajectory&, int iter, int k)> reward_fn;
  // Overrides greedy evaluation for a fixed action list.  Default:
  // Environment::evaluate.
  std::function<Reward(const std::vector<HybridAction>&)> eval_fn;
  std::string checkpoint_path;  // save the best policy here when nonempty
};

struct TrainResult {
  std::vector<IterationStats> history;
  AutoregressivePolicy policy;       // final parameters
  AutoregressivePolicy best_policy;  // parameters at the best greedy ratio
  double best_greedy_ratio = 0.0;
  std::vector<HybridAction> best_greedy_actions;
  double best_sampled_ratio = 0.0;
  std::vector<HybridAction> best_sampled_actions;
  double total_wall_ms = 0.0;
};

TrainResult train_rl_qaoa(const EnvConfig& env_cfg, const PPOHyperparams& hp,
                          const TrainOptions& opt, std::uint64_t seed);

// One CSV row per iteration; deterministic given deterministic stats
// (wall-clock timing is reported elsewhere).
void write_training_log(std::ostream& out,
                        const std::vector<IterationStats>& history,
                        const std::string& algorithm);

}  // namespace rlqaoa
