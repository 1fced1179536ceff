#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rlqaoa/distributions.hpp"

namespace rlqaoa {

enum class ContinuousFamily { sigmoid_gaussian, beta };

struct PolicyDims {
  int q = 8;          // protocol length / autoregressive steps
  int n_actions = 5;  // |A^d|
  int d_h = 100;      // hidden width per step block
  int n_hidden = 2;   // hidden masked dense layers
  ContinuousFamily family = ContinuousFamily::sigmoid_gaussian;
};

struct HybridAction {
  int discrete = 0;
  double continuous = 0.5;  // raw duration fraction in (0,1)
};

struct Trajectory {
  std::vector<HybridAction> actions;
  double log_prob_discrete = 0.0;    // sum_j log pi^d(a^d_j | ...)
  double log_prob_continuous = 0.0;  // sum_j log pi^c(a^c_j | ...)
  Eigen::VectorXd embedded;          // stacked step embeddings, length q*|A^d|
};

// Flat container for every parameter tensor; also reused for gradients and
// Adam moments so elementwise updates can zip over one layout.
struct ParamSet {
  std::vector<Eigen::MatrixXd> mats;  // hidden W_0..W_{L-1}, then V^p, V^k, V^xi
  std::vector<Eigen::VectorXd> vecs;  // hidden b_0..b_{L-1}, then c^p, c^k, c^xi
  void set_zero();
  bool all_finite() const;
};

struct AdamState {
  ParamSet m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Head outputs for one step.
struct StepHeads {
  Eigen::VectorXd log_probs;  // z^p: normalized log-softmax over |A^d|
  Eigen::VectorXd kappa_raw;  // z^kappa: unconstrained
  Eigen::VectorXd xi;         // z^xi: exp of head, clamped into [1e-4, 10]
};

struct BatchActivations {
  Eigen::MatrixXd x;                    // (q*A) x M embedded inputs
  std::vector<Eigen::MatrixXd> pre;     // hidden pre-activations, (q*d_h) x M
  std::vector<Eigen::MatrixXd> hidden;  // ReLU outputs
  Eigen::MatrixXd head_p;               // pre-softmax logits, (q*A) x M
  Eigen::MatrixXd head_k;               // raw kappa head
  Eigen::MatrixXd head_x;               // pre-exp xi head
  int batch() const { return static_cast<int>(x.cols()); }
};

struct BackwardWeights {
  Eigen::VectorXd discrete;    // w_k multiplying log pi^d(tau_k)
  Eigen::VectorXd continuous;  // w_k multiplying log pi^c(tau_k)
  double entropy_coef = 0.0;   // coefficient on the exact discrete entropy
};

class AutoregressivePolicy {
 public:
  static constexpr double kXiFloor = 1e-4;
  static constexpr double kXiCeil = 10.0;

  AutoregressivePolicy(const PolicyDims& dims, std::uint64_t init_seed);

  const PolicyDims& dims() const { return dims_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  // Zeroes every weight entry the causal masks forbid.
  void enforce_masks();

  Eigen::VectorXd embed(const HybridAction& a) const;

  // Head outputs at `step` (0-based) given the full stacked embedding vector;
  // entries of x at blocks >= step are ignored by construction.
  StepHeads forward(const Eigen::VectorXd& x, int step) const;

  Trajectory sample_trajectory(std::mt19937_64& rng) const;
  // One trajectory per engine; engine k is consumed exactly as if trajectory
  // k had been sampled alone.  Optionally captures activations for training.
  std::vector<Trajectory> sample_batch(std::vector<std::mt19937_64>& rngs,
                                       BatchActivations* acts = nullptr) const;

  std::pair<double, double> log_prob(const Trajectory& traj) const;
  std::vector<HybridAction> greedy_actions() const;

  BatchActivations forward_batch(const Eigen::MatrixXd& x) const;
  // Per-trajectory discrete/continuous log-probs (and per-trajectory summed
  // masked entropy) under the current parameters, from cached activations.
  void batch_log_probs(const BatchActivations& acts,
                       const std::vector<Trajectory>& batch,
                       Eigen::VectorXd& lp_discrete,
                       Eigen::VectorXd& lp_continuous,
                       Eigen::VectorXd* entropy = nullptr) const;

  // Gradient of sum_k [w^d_k log pi^d(tau_k) + w^c_k log pi^c(tau_k)
  //                    + entropy_coef * S(tau_k)]  w.r.t. every parameter.
  ParamSet backward(const BatchActivations& acts,
                    const std::vector<Trajectory>& batch,
                    const BackwardWeights& weights) const;

  ParamSet zero_like() const;

  // Effective continuous parameters at one step for a chosen discrete index.
  std::pair<double, double> continuous_params(double kappa_raw,
                                              double xi_pre) const;

 private:
  void head_blocks(const Eigen::MatrixXd& hidden_last, int step,
                   Eigen::Ref<Eigen::MatrixXd> p, Eigen::Ref<Eigen::MatrixXd> k,
                   Eigen::Ref<Eigen::MatrixXd> x) const;
  void hidden_block(const BatchActivations& acts, int layer, int step,
                    Eigen::Ref<Eigen::MatrixXd> pre) const;

  PolicyDims dims_;
  ParamSet params_;
};

// Ascent Adam update (the objective is maximized); checks finiteness.
// The ParamSet overloads serve trainers whose parameters are not a network.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& adam,
               double lr);
void adam_step(AutoregressivePolicy& policy, const ParamSet& grads,
               AdamState& adam, double lr);
AdamState make_adam_state(const ParamSet& params);
AdamState make_adam_state(const AutoregressivePolicy& policy);

struct Checkpoint {
  PolicyDims dims;
  ParamSet params;
  AdamState adam;
  std::string rng_state;  // serialized engine, caller-defined meaning
  long iteration = 0;
};

void save_checkpoint(const std::string& path, const AutoregressivePolicy& policy,
                     const AdamState& adam, const std::string& rng_state,
                     long iteration);
Checkpoint load_checkpoint(const std::string& path);

// Normalized masked log-probs for one step: entries forbidden by `allowed`
// get -inf, the rest are renormalized; computed stably from raw logits.
Eigen::VectorXd masked_log_probs(const Eigen::VectorXd& logits,
                                 const std::vector<bool>& allowed);

}  // namespace rlqaoa
