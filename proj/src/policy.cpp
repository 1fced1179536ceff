#include "rlqaoa/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

#include "rlqaoa/rng.hpp"

namespace rlqaoa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr char kCheckpointMagic[9] = "RLQAOACK";
constexpr std::uint32_t kCheckpointVersion = 1;

void validate(const PolicyDims& d) {
  if (d.q < 1) throw std::invalid_argument("q must be >= 1");
  if (d.n_actions < 1) throw std::invalid_argument("n_actions must be >= 1");
  if (d.q > 1 && d.n_actions < 2)
    throw std::invalid_argument("n_actions must be >= 2 when q > 1");
  if (d.d_h < 1) throw std::invalid_argument("d_h must be >= 1");
  if (d.n_hidden < 1) throw std::invalid_argument("n_hidden must be >= 1");
}

std::vector<bool> step_mask(int n_actions, int step, int prev_action) {
  std::vector<bool> allowed(n_actions, true);
  if (step > 0) allowed[prev_action] = false;
  return allowed;
}

double logsumexp_allowed(const Eigen::VectorXd& v,
                         const std::vector<bool>& allowed) {
  double max = kNegInf;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (allowed[i] && v(i) > max) max = v(i);
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (allowed[i]) s += std::exp(v(i) - max);
  return max + std::log(s);
}

}  // namespace

void ParamSet::set_zero() {
  for (auto& m : mats) m.setZero();
  for (auto& v : vecs) v.setZero();
}

bool ParamSet::all_finite() const {
  for (const auto& m : mats)
    if (!m.allFinite()) return false;
  for (const auto& v : vecs)
    if (!v.allFinite()) return false;
  return true;
}

Eigen::VectorXd masked_log_probs(const Eigen::VectorXd& logits,
                                 const std::vector<bool>& allowed) {
  if (static_cast<Eigen::Index>(allowed.size()) != logits.size())
    throw std::invalid_argument("mask length mismatch");
  double lse = logsumexp_allowed(logits, allowed);
  Eigen::VectorXd out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    out(i) = allowed[i] ? logits(i) - lse : kNegInf;
  return out;
}

AutoregressivePolicy::AutoregressivePolicy(const PolicyDims& dims,
                                           std::uint64_t init_seed)
    : dims_(dims) {
  validate(dims_);
  const int q = dims_.q, a = dims_.n_actions, dh = dims_.d_h;
  const int l = dims_.n_hidden;
  params_.mats.resize(l + 3);
  params_.vecs.resize(l + 3);
  params_.mats[0] = Eigen::MatrixXd::Zero(q * dh, q * a);
  for (int i = 1; i < l; ++i)
    params_.mats[i] = Eigen::MatrixXd::Zero(q * dh, q * dh);
  for (int i = 0; i < 3; ++i)
    params_.mats[l + i] = Eigen::MatrixXd::Zero(q * a, q * dh);
  for (int i = 0; i < l; ++i) params_.vecs[i] = Eigen::VectorXd::Zero(q * dh);
  for (int i = 0; i < 3; ++i)
    params_.vecs[l + i] = Eigen::VectorXd::Zero(q * a);

  // Hidden weights: Xavier-uniform per step block (head weights and every
  // bias stay zero so the initial policy is exactly uniform with kappa = 0,
  // xi = 1).
  auto rng = make_engine(init_seed, Stream::init);
  auto fill_block = [&](Eigen::Ref<Eigen::MatrixXd> block, int fan_in,
                        int fan_out) {
    double bound = std::sqrt(6.0 / double(fan_in + fan_out));
    std::uniform_real_distribution<double> unif(-bound, bound);
    for (Eigen::Index c = 0; c < block.cols(); ++c)
      for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = unif(rng);
  };
  for (int j = 1; j < q; ++j)
    fill_block(params_.mats[0].block(j * dh, 0, dh, j * a), j * a, dh);
  for (int i = 1; i < l; ++i)
    for (int j = 0; j < q; ++j)
      fill_block(params_.mats[i].block(j * dh, 0, dh, (j + 1) * dh),
                 (j + 1) * dh, dh);
}

void AutoregressivePolicy::enforce_masks() {
  const int q = dims_.q, a = dims_.n_actions, dh = dims_.d_h;
  const int l = dims_.n_hidden;
  for (int j = 0; j < q; ++j) {
    params_.mats[0].block(j * dh, j * a, dh, (q - j) * a).setZero();
    for (int i = 1; i < l; ++i)
      if (j + 1 < q)
        params_.mats[i].block(j * dh, (j + 1) * dh, dh, (q - j - 1) * dh)
            .setZero();
    for (int h = 0; h < 3; ++h)
      if (j + 1 < q)
        params_.mats[l + h].block(j * a, (j + 1) * dh, a, (q - j - 1) * dh)
            .setZero();
  }
}

Eigen::VectorXd AutoregressivePolicy::embed(const HybridAction& act) const {
  if (act.discrete < 0 || act.discrete >= dims_.n_actions)
    throw std::invalid_argument("discrete action index out of range");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dims_.n_actions);
  x(act.discrete) = act.continuous;
  return x;
}

void AutoregressivePolicy::hidden_block(const BatchActivations& acts, int layer,
                                        int step,
                                        Eigen::Ref<Eigen::MatrixXd> pre) const {
  const int a = dims_.n_actions, dh = dims_.d_h;
  const int m = acts.batch();
  pre = params_.vecs[layer].segment(step * dh, dh).replicate(1, m);
  if (layer == 0) {
    if (step > 0)
      pre.noalias() += params_.mats[0].block(step * dh, 0, dh, step * a) *
                       acts.x.topRows(step * a);
  } else {
    pre.noalias() +=
        params_.mats[layer].block(step * dh, 0, dh, (step + 1) * dh) *
        acts.hidden[layer - 1].topRows((step + 1) * dh);
  }
}

void AutoregressivePolicy::head_blocks(const Eigen::MatrixXd& hidden_last,
                                       int step, Eigen::Ref<Eigen::MatrixXd> p,
                                       Eigen::Ref<Eigen::MatrixXd> k,
                                       Eigen::Ref<Eigen::MatrixXd> x) const {
  const int a = dims_.n_actions, dh = dims_.d_h;
  const int l = dims_.n_hidden;
  const int m = static_cast<int>(hidden_last.cols());
  const auto top = hidden_last.topRows((step + 1) * dh);
  p = params_.vecs[l + 0].segment(step * a, a).replicate(1, m);
  k = params_.vecs[l + 1].segment(step * a, a).replicate(1, m);
  x = params_.vecs[l + 2].segment(step * a, a).replicate(1, m);
  p.noalias() += params_.mats[l + 0].block(step * a, 0, a, (step + 1) * dh) * top;
  k.noalias() += params_.mats[l + 1].block(step * a, 0, a, (step + 1) * dh) * top;
  x.noalias() += params_.mats[l + 2].block(step * a, 0, a, (step + 1) * dh) * top;
}

BatchActivations AutoregressivePolicy::forward_batch(
    const Eigen::MatrixXd& x) const {
  const int q = dims_.q, a = dims_.n_actions, dh = dims_.d_h;
  const int l = dims_.n_hidden;
  if (x.rows() != q * a) throw std::invalid_argument("embedded input rows mismatch");
  const int m = static_cast<int>(x.cols());
  BatchActivations acts;
  acts.x = x;
  acts.pre.resize(l);
  acts.hidden.resize(l);
  for (int i = 0; i < l; ++i) {
    acts.pre[i].resize(q * dh, m);
    acts.hidden[i].resize(q * dh, m);
  }
  acts.head_p.resize(q * a, m);
  acts.head_k.resize(q * a, m);
  acts.head_x.resize(q * a, m);
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < q; ++j)
      hidden_block(acts, i, j, acts.pre[i].middleRows(j * dh, dh));
    acts.hidden[i] = acts.pre[i].cwiseMax(0.0);
  }
  for (int j = 0; j < q; ++j)
    head_blocks(acts.hidden[l - 1], j, acts.head_p.middleRows(j * a, a),
                acts.head_k.middleRows(j * a, a),
                acts.head_x.middleRows(j * a, a));
  return acts;
}

StepHeads AutoregressivePolicy::forward(const Eigen::VectorXd& x,
                                        int step) const {
  if (step < 0 || step >= dims_.q) throw std::invalid_argument("step out of range");
  BatchActivations acts = forward_batch(x);
  const int a = dims_.n_actions;
  StepHeads heads;
  Eigen::VectorXd logits = acts.head_p.col(0).segment(step * a, a);
  double lse = logsumexp_allowed(logits, std::vector<bool>(a, true));
  heads.log_probs = (logits.array() - lse).matrix();
  heads.kappa_raw = acts.head_k.col(0).segment(step * a, a);
  heads.xi = acts.head_x.col(0)
                 .segment(step * a, a)
                 .array()
                 .exp()
                 .max(kXiFloor)
                 .min(kXiCeil)
                 .matrix();
  return heads;
}

std::pair<double, double> AutoregressivePolicy::continuous_params(
    double kappa_raw, double xi_pre) const {
  double xi = std::clamp(std::exp(xi_pre), kXiFloor, kXiCeil);
  double kappa = kappa_raw;
  if (dims_.family == ContinuousFamily::beta)
    kappa = std::clamp(std::exp(kappa_raw), kXiFloor, kXiCeil);
  return {kappa, xi};
}

std::vector<Trajectory> AutoregressivePolicy::sample_batch(
    std::vector<std::mt19937_64>& rngs, BatchActivations* acts_out) const {
  const int q = dims_.q, a = dims_.n_actions, dh = dims_.d_h;
  const int l = dims_.n_hidden;
  const int m = static_cast<int>(rngs.size());
  if (m == 0) return {};

  BatchActivations acts;
  acts.x = Eigen::MatrixXd::Zero(q * a, m);
  acts.pre.resize(l);
  acts.hidden.resize(l);
  for (int i = 0; i < l; ++i) {
    acts.pre[i].resize(q * dh, m);
    acts.hidden[i].resize(q * dh, m);
  }
  acts.head_p.resize(q * a, m);
  acts.head_k.resize(q * a, m);
  acts.head_x.resize(q * a, m);

  std::vector<Trajectory> batch(m);
  for (auto& t : batch) {
    t.actions.reserve(q);
    t.embedded = Eigen::VectorXd::Zero(q * a);
  }

  for (int j = 0; j < q; ++j) {
    for (int i = 0; i < l; ++i) {
      auto pre = acts.pre[i].middleRows(j * dh, dh);
      hidden_block(acts, i, j, pre);
      acts.hidden[i].middleRows(j * dh, dh) = pre.cwiseMax(0.0);
    }
    head_blocks(acts.hidden[l - 1], j, acts.head_p.middleRows(j * a, a),
                acts.head_k.middleRows(j * a, a),
                acts.head_x.middleRows(j * a, a));

    for (int k = 0; k < m; ++k) {
      Trajectory& traj = batch[k];
      int prev = j > 0 ? traj.actions[j - 1].discrete : -1;
      auto allowed = step_mask(a, j, prev);
      Eigen::VectorXd logits = acts.head_p.col(k).segment(j * a, a);
      Eigen::VectorXd lp = masked_log_probs(logits, allowed);
      int action = categorical_sample({lp}, allowed, rngs[k]);
      traj.log_prob_discrete += lp(action);

      auto [kappa, xi] = continuous_params(acts.head_k(j * a + action, k),
                                           acts.head_x(j * a + action, k));
      double xc;
      if (dims_.family == ContinuousFamily::beta) {
        BetaParams bp{kappa, xi};
        xc = beta_sample(bp, rngs[k]);
        traj.log_prob_continuous += beta_log_prob(xc, bp);
      } else {
        SigmoidGaussianParams sp{kappa, xi};
        xc = sg_sample(sp, rngs[k]);
        traj.log_prob_continuous += sg_log_prob(xc, sp);
      }
      traj.actions.push_back({action, xc});
      traj.embedded(j * a + action) = xc;
      acts.x(j * a + action, k) = xc;
    }
  }
  if (acts_out) *acts_out = std::move(acts);
  return batch;
}

Trajectory AutoregressivePolicy::sample_trajectory(std::mt19937_64& rng) const {
  std::vector<std::mt19937_64> rngs{rng};
  auto batch = sample_batch(rngs);
  rng = rngs[0];  // hand the advanced engine state back to the caller
  return batch[0];
}

void AutoregressivePolicy::batch_log_probs(const BatchActivations& acts,
                                           const std::vector<Trajectory>& batch,
                                           Eigen::VectorXd& lp_discrete,
                                           Eigen::VectorXd& lp_continuous,
                                           Eigen::VectorXd* entropy) const {
  const int q = dims_.q, a = dims_.n_actions;
  const int m = static_cast<int>(batch.size());
  if (acts.batch() != m) throw std::invalid_argument("activation batch mismatch");
  lp_discrete = Eigen::VectorXd::Zero(m);
  lp_continuous = Eigen::VectorXd::Zero(m);
  if (entropy) *entropy = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < m; ++k) {
    const Trajectory& traj = batch[k];
    if (static_cast<int>(traj.actions.size()) != q)
      throw std::invalid_argument("trajectory length mismatch");
    for (int j = 0; j < q; ++j) {
      int action = traj.actions[j].discrete;
      int prev = j > 0 ? traj.actions[j - 1].discrete : -1;
      if (j > 0 && action == prev)
        throw std::invalid_argument("trajectory repeats a discrete action");
      auto allowed = step_mask(a, j, prev);
      Eigen::VectorXd lp =
          masked_log_probs(acts.head_p.col(k).segment(j * a, a), allowed);
      lp_discrete(k) += lp(action);
      if (entropy) (*entropy)(k) += categorical_entropy({lp});

      auto [kappa, xi] = continuous_params(acts.head_k(j * a + action, k),
                                           acts.head_x(j * a + action, k));
      double xc = traj.actions[j].continuous;
      lp_continuous(k) += dims_.family == ContinuousFamily::beta
                              ? beta_log_prob(xc, {kappa, xi})
                              : sg_log_prob(xc, {kappa, xi});
    }
  }
}

std::pair<double, double> AutoregressivePolicy::log_prob(
    const Trajectory& traj) const {
  const int q = dims_.q, a = dims_.n_actions;
  if (static_cast<int>(traj.actions.size()) != q)
    throw std::invalid_argument("trajectory length mismatch");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(q * a, 1);
  for (int j = 0; j < q; ++j) {
    if (j > 0 && traj.actions[j].discrete == traj.actions[j - 1].discrete)
      throw std::invalid_argument("trajectory repeats a discrete action");
    x(j * a + traj.actions[j].discrete, 0) = traj.actions[j].continuous;
  }
  BatchActivations acts = forward_batch(x);
  Eigen::VectorXd lpd, lpc;
  batch_log_probs(acts, {traj}, lpd, lpc);
  return {lpd(0), lpc(0)};
}

std::vector<HybridAction> AutoregressivePolicy::greedy_actions() const {
  const int q = dims_.q, a = dims_.n_actions;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(q * a, 1);
  std::vector<HybridAction> out;
  out.reserve(q);
  // One incremental pass; blocks >= j of x are still zero when step j is
  // computed, which the causal masks ignore anyway.
  for (int j = 0; j < q; ++j) {
    BatchActivations acts = forward_batch(x);
    int prev = j > 0 ? out[j - 1].discrete : -1;
    auto allowed = step_mask(a, j, prev);
    int best = -1;
    for (int i = 0; i < a; ++i) {
      if (!allowed[i]) continue;
      if (best < 0 || acts.head_p(j * a + i, 0) > acts.head_p(j * a + best, 0))
        best = i;
    }
    auto [kappa, xi] = continuous_params(acts.head_k(j * a + best, 0),
                                         acts.head_x(j * a + best, 0));
    double xc = dims_.family == ContinuousFamily::beta
                    ? clamp_unit(kappa / (kappa + xi))
                    : clamp_unit(sigmoid(kappa));
    out.push_back({best, xc});
    x(j * a + best, 0) = xc;
  }
  return out;
}

ParamSet AutoregressivePolicy::zero_like() const {
  ParamSet g;
  g.mats.reserve(params_.mats.size());
  g.vecs.reserve(params_.vecs.size());
  for (const auto& m : params_.mats)
    g.mats.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : params_.vecs)
    g.vecs.push_back(Eigen::VectorXd::Zero(v.size()));
  return g;
}

ParamSet AutoregressivePolicy::backward(const BatchActivations& acts,
                                        const std::vector<Trajectory>& batch,
                                        const BackwardWeights& weights) const {
  const int q = dims_.q, a = dims_.n_actions, dh = dims_.d_h;
  const int l = dims_.n_hidden;
  const int m = static_cast<int>(batch.size());
  if (acts.batch() != m) throw std::invalid_argument("activation batch mismatch");
  if (weights.discrete.size() != m || weights.continuous.size() != m)
    throw std::invalid_argument("weight vector size mismatch");
  if (acts.pre.empty()) throw std::invalid_argument("missing activation cache");

  ParamSet grads = zero_like();
  Eigen::MatrixXd d_hidden = Eigen::MatrixXd::Zero(q * dh, m);

  // Head-level sensitivities, then accumulate head weight gradients and the
  // pullback into the last hidden layer, step block by step block.
  Eigen::MatrixXd dp(a, m), dk(a, m), dx(a, m);
  for (int j = 0; j < q; ++j) {
    dp.setZero();
    dk.setZero();
    dx.setZero();
    for (int k = 0; k < m; ++k) {
      const Trajectory& traj = batch[k];
      int action = traj.actions[j].discrete;
      int prev = j > 0 ? traj.actions[j - 1].discrete : -1;
      auto allowed = step_mask(a, j, prev);
      Eigen::VectorXd lp =
          masked_log_probs(acts.head_p.col(k).segment(j * a, a), allowed);
      double entropy = categorical_entropy({lp});
      double wd = weights.discrete(k);
      for (int i = 0; i < a; ++i) {
        if (!allowed[i]) continue;
        double p = std::exp(lp(i));
        double g = wd * ((i == action ? 1.0 : 0.0) - p);
        if (weights.entropy_coef != 0.0 && p > 0.0)
          g -= weights.entropy_coef * p * (lp(i) + entropy);
        dp(i, k) = g;
      }

      double kraw = acts.head_k(j * a + action, k);
      double xpre = acts.head_x(j * a + action, k);
      auto [kappa, xi] = continuous_params(kraw, xpre);
      double xc = traj.actions[j].continuous;
      GradPair gp = dims_.family == ContinuousFamily::beta
                        ? beta_grad_log_prob(xc, {kappa, xi})
                        : sg_grad_log_prob(xc, {kappa, xi});
      double wc = weights.continuous(k);
      // Chain through the head transforms; a saturated clamp has zero slope.
      double dkraw = gp.first;
      if (dims_.family == ContinuousFamily::beta)
        dkraw = (kappa > kXiFloor && kappa < kXiCeil) ? gp.first * kappa : 0.0;
      double dxpre = (xi > kXiFloor && xi < kXiCeil) ? gp.second * xi : 0.0;
      dk(action, k) = wc * dkraw;
      dx(action, k) = wc * dxpre;
    }

    const auto top = acts.hidden[l - 1].topRows((j + 1) * dh);
    auto vp = params_.mats[l + 0].block(j * a, 0, a, (j + 1) * dh);
    auto vk = params_.mats[l + 1].block(j * a, 0, a, (j + 1) * dh);
    auto vx = params_.mats[l + 2].block(j * a, 0, a, (j + 1) * dh);
    grads.mats[l + 0].block(j * a, 0, a, (j + 1) * dh).noalias() =
        dp * top.transpose();
    grads.mats[l + 1].block(j * a, 0, a, (j + 1) * dh).noalias() =
        dk * top.transpose();
    grads.mats[l + 2].block(j * a, 0, a, (j + 1) * dh).noalias() =
        dx * top.transpose();
    grads.vecs[l + 0].segment(j * a, a) = dp.rowwise().sum();
    grads.vecs[l + 1].segment(j * a, a) = dk.rowwise().sum();
    grads.vecs[l + 2].segment(j * a, a) = dx.rowwise().sum();
    d_hidden.topRows((j + 1) * dh).noalias() += vp.transpose() * dp;
    d_hidden.topRows((j + 1) * dh).noalias() += vk.transpose() * dk;
    d_hidden.topRows((j + 1) * dh).noalias() += vx.transpose() * dx;
  }

  // Hidden layers, last to first.
  for (int i = l - 1; i >= 0; --i) {
    Eigen::MatrixXd d_pre = d_hidden.cwiseProduct(
        (acts.pre[i].array() > 0.0).cast<double>().matrix());
    grads.vecs[i] = d_pre.rowwise().sum();
    if (i == 0) {
      for (int j = 1; j < q; ++j)
        grads.mats[0].block(j * dh, 0, dh, j * a).noalias() =
            d_pre.middleRows(j * dh, dh) * acts.x.topRows(j * a).transpose();
      break;
    }
    Eigen::MatrixXd d_below = Eigen::MatrixXd::Zero(q * dh, m);
    for (int j = 0; j < q; ++j) {
      auto dpj = d_pre.middleRows(j * dh, dh);
      grads.mats[i].block(j * dh, 0, dh, (j + 1) * dh).noalias() =
          dpj * acts.hidden[i - 1].topRows((j + 1) * dh).transpose();
      d_below.topRows((j + 1) * dh).noalias() +=
          params_.mats[i].block(j * dh, 0, dh, (j + 1) * dh).transpose() * dpj;
    }
    d_hidden = std::move(d_below);
  }
  return grads;
}

AdamState make_adam_state(const ParamSet& params) {
  auto zeros = [](const ParamSet& src) {
    ParamSet g;
    g.mats.reserve(src.mats.size());
    g.vecs.reserve(src.vecs.size());
    for (const auto& m : src.mats)
      g.mats.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
    for (const auto& v : src.vecs)
      g.vecs.push_back(Eigen::VectorXd::Zero(v.size()));
    return g;
  };
  AdamState s;
  s.m = zeros(params);
  s.v = zeros(params);
  return s;
}

AdamState make_adam_state(const AutoregressivePolicy& policy) {
  return make_adam_state(policy.params());
}

void adam_step(ParamSet& p, const ParamSet& grads, AdamState& adam,
               double lr) {
  if (grads.mats.size() != p.mats.size() || grads.vecs.size() != p.vecs.size())
    throw std::invalid_argument("gradient shape mismatch");
  adam.step += 1;
  double bc1 = 1.0 - std::pow(adam.beta1, double(adam.step));
  double bc2 = 1.0 - std::pow(adam.beta2, double(adam.step));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols())
      throw std::invalid_argument("gradient shape mismatch");
    m = adam.beta1 * m + (1.0 - adam.beta1) * grad;
    v = adam.beta2 * v + (1.0 - adam.beta2) * grad.cwiseProduct(grad);
    param.array() += lr * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + adam.eps);
  };
  for (std::size_t i = 0; i < p.mats.size(); ++i)
    update(p.mats[i], grads.mats[i], adam.m.mats[i], adam.v.mats[i]);
  for (std::size_t i = 0; i < p.vecs.size(); ++i)
    update(p.vecs[i], grads.vecs[i], adam.m.vecs[i], adam.v.vecs[i]);
  if (!p.all_finite())
    throw std::runtime_error("non-finite parameters after Adam update");
}

void adam_step(AutoregressivePolicy& policy, const ParamSet& grads,
               AdamState& adam, double lr) {
  adam_step(policy.params(), grads, adam, lr);
}

namespace {

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), std::streamsize(n));
}

void read_bytes(std::ifstream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), std::streamsize(n));
  if (!in) throw std::runtime_error("truncated checkpoint file");
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  std::int64_t rows = m.rows(), cols = m.cols();
  write_bytes(out, &rows, sizeof rows);
  write_bytes(out, &cols, sizeof cols);
  write_bytes(out, m.data(), sizeof(double) * std::size_t(rows * cols));
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
  std::int64_t rows = 0, cols = 0;
  read_bytes(in, &rows, sizeof rows);
  read_bytes(in, &cols, sizeof cols);
  if (rows < 0 || cols < 0 || rows * cols > (std::int64_t(1) << 28))
    throw std::runtime_error("corrupt checkpoint tensor header");
  Eigen::MatrixXd m(rows, cols);
  read_bytes(in, m.data(), sizeof(double) * std::size_t(rows * cols));
  return m;
}

void write_param_set(std::ofstream& out, const ParamSet& p) {
  std::int64_t nm = std::int64_t(p.mats.size()), nv = std::int64_t(p.vecs.size());
  write_bytes(out, &nm, sizeof nm);
  write_bytes(out, &nv, sizeof nv);
  for (const auto& m : p.mats) write_matrix(out, m);
  for (const auto& v : p.vecs) write_matrix(out, v);
}

ParamSet read_param_set(std::ifstream& in) {
  std::int64_t nm = 0, nv = 0;
  read_bytes(in, &nm, sizeof nm);
  read_bytes(in, &nv, sizeof nv);
  if (nm < 0 || nv < 0 || nm + nv > 1024)
    throw std::runtime_error("corrupt checkpoint parameter count");
  ParamSet p;
  for (std::int64_t i = 0; i < nm; ++i) p.mats.push_back(read_matrix(in));
  for (std::int64_t i = 0; i < nv; ++i) p.vecs.push_back(read_matrix(in));
  return p;
}

}  // namespace

void save_checkpoint(const std::string& path, const AutoregressivePolicy& policy,
                     const AdamState& adam, const std::string& rng_state,
                     long iteration) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  write_bytes(out, kCheckpointMagic, 8);
  write_bytes(out, &kCheckpointVersion, sizeof kCheckpointVersion);
  const PolicyDims& d = policy.dims();
  std::int32_t dims[5] = {d.q, d.n_actions, d.d_h, d.n_hidden,
                          d.family == ContinuousFamily::beta ? 1 : 0};
  write_bytes(out, dims, sizeof dims);
  write_param_set(out, policy.params());
  write_param_set(out, adam.m);
  write_param_set(out, adam.v);
  std::int64_t astep = adam.step;
  write_bytes(out, &astep, sizeof astep);
  std::int64_t rng_len = std::int64_t(rng_state.size());
  write_bytes(out, &rng_len, sizeof rng_len);
  write_bytes(out, rng_state.data(), rng_state.size());
  std::int64_t iter = iteration;
  write_bytes(out, &iter, sizeof iter);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  read_bytes(in, magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  std::uint32_t version = 0;
  read_bytes(in, &version, sizeof version);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version");
  std::int32_t dims[5];
  read_bytes(in, dims, sizeof dims);
  Checkpoint ck;
  ck.dims.q = dims[0];
  ck.dims.n_actions = dims[1];
  ck.dims.d_h = dims[2];
  ck.dims.n_hidden = dims[3];
  ck.dims.family =
      dims[4] ? ContinuousFamily::beta : ContinuousFamily::sigmoid_gaussian;
  ck.params = read_param_set(in);
  ck.adam.m = read_param_set(in);
  ck.adam.v = read_param_set(in);
  std::int64_t astep = 0;
  read_bytes(in, &astep, sizeof astep);
  ck.adam.step = long(astep);
  std::int64_t rng_len = 0;
  read_bytes(in, &rng_len, sizeof rng_len);
  if (rng_len < 0 || rng_len > (1 << 20))
    throw std::runtime_error("corrupt checkpoint rng state");
  ck.rng_state.resize(std::size_t(rng_len));
  if (rng_len > 0) read_bytes(in, ck.rng_state.data(), std::size_t(rng_len));
  std::int64_t iter = 0;
  read_bytes(in, &iter, sizeof iter);
  ck.iteration = long(iter);
  return ck;
}

}  // namespace rlqaoa
