#include "rlqaoa/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rlqaoa/rng.hpp"

namespace rlqaoa {

namespace {

constexpr double kRatioExpClamp = 20.0;


}  // namespace

void validate_hyperparams(const PPOHyperparams& hp) {
  if (hp.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(hp.lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(hp.eps_c > 0.0) || !(hp.eps_d > 0.0))
    throw std::invalid_argument("clip radii must be positive");
  if (hp.ppo_epochs < 1) throw std::invalid_argument("ppo_epochs must be >= 1");
  if (hp.ema < 0.0 || hp.ema >= 1.0)
    throw std::invalid_argument("ema must be in [0, 1)");
  if (hp.total_iters < 0) throw std::invalid_argument("total_iters negative");
  if (hp.lr_decay_every < 1 || hp.temp_decay_every < 1)
    throw std::invalid_argument("decay intervals must be >= 1");
}

double staircase_lr(int iter, const PPOHyperparams& hp) {
  if (iter < 0) throw std::invalid_argument("iteration negative");
  return hp.lr * std::pow(hp.lr_decay, double(iter / hp.lr_decay_every));
}

double smooth_temp(int iter, const PPOHyperparams& hp) {
  if (iter < 0) throw std::invalid_argument("iteration negative");
  return hp.entropy_temp *
         std::pow(hp.temp_decay, double(iter) / hp.temp_decay_every);
}

Eigen::VectorXd compute_advantages(const Eigen::VectorXd& returns,
                                   BaselineEMA& baseline) {
  if (returns.size() == 0) throw std::invalid_argument("empty return batch");
  Eigen::VectorXd adv = returns.array() - baseline.value;
  baseline.update(returns.mean());
  return adv;
}

double importance_ratio(double lp_new, double lp_old) {
  return std::exp(
      std::clamp(lp_new - lp_old, -kRatioExpClamp, kRatioExpClamp));
}

double clipped_term(double ratio, double advantage, double eps) {
  double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double clipped_term_dlogp(double lp_new, double lp_old, double advantage,
                          double eps) {
  double d = lp_new - lp_old;
  if (d <= -kRatioExpClamp || d >= kRatioExpClamp) return 0.0;
  double ratio = std::exp(d);
  double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  if (clipped * advantage < ratio * advantage) return 0.0;  // clip binds
  return ratio * advantage;
}

HybridObjective hybrid_objective(const AutoregressivePolicy& policy,
                                 const BatchActivations& acts,
                                 const std::vector<Trajectory>& batch,
                                 const Eigen::VectorXd& lpd_old,
                                 const Eigen::VectorXd& lpc_old,
                                 const Eigen::VectorXd& advantages,
                                 double eps_d, double eps_c,
                                 double entropy_temp, bool train_continuous) {
  const int m = static_cast<int>(batch.size());
  if (lpd_old.size() != m || lpc_old.size() != m || advantages.size() != m)
    throw std::invalid_argument("batch/snapshot size mismatch");

  Eigen::VectorXd lpd_new, lpc_new, entropy;
  policy.batch_log_probs(acts, batch, lpd_new, lpc_new, &entropy);

  HybridObjective out;
  BackwardWeights w;
  w.discrete = Eigen::VectorXd::Zero(m);
  w.continuous = Eigen::VectorXd::Zero(m);
  w.entropy_coef = entropy_temp / m;
  for (int k = 0; k < m; ++k) {
    double rd = importance_ratio(lpd_new(k), lpd_old(k));
    out.surrogate_d += clipped_term(rd, advantages(k), eps_d) / m;
    w.discrete(k) =
        clipped_term_dlogp(lpd_new(k), lpd_old(k), advantages(k), eps_d) / m;
    out.kl_d += (lpd_old(k) - lpd_new(k)) / m;
    if (train_continuous) {
      double rc = importance_ratio(lpc_new(k), lpc_old(k));
      out.surrogate_c += clipped_term(rc, advantages(k), eps_c) / m;
      w.continuous(k) =
          clipped_term_dlogp(lpc_new(k), lpc_old(k), advantages(k), eps_c) / m;
      out.kl_c += (lpc_old(k) - lpc_new(k)) / m;
    }
  }
  out.mean_entropy = entropy.mean();
  out.entropy_term = entropy_temp * out.mean_entropy;
  out.value = out.surrogate_d + out.surrogate_c + out.entropy_term;
  out.grads = policy.backward(acts, batch, w);
  if (!std::isfinite(out.value) || !out.grads.all_finite())
    throw std::runtime_error("non-finite PPO objective or gradients");
  return out;
}

double global_norm(const ParamSet& g) {
  double sq = 0.0;
  for (const auto& m : g.mats) sq += m.squaredNorm();
  for (const auto& v : g.vecs) sq += v.squaredNorm();
  return std::sqrt(sq);
}

void clip_global_norm(ParamSet& g, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("max_norm must be > 0");
  double norm = global_norm(g);
  if (norm <= max_norm) return;
  double scale = max_norm / norm;
  for (auto& m : g.mats) m *= scale;
  for (auto& v : g.vecs) v *= scale;
}

TrainResult train_rl_qaoa(const EnvConfig& env_cfg, const PPOHyperparams& hp,
                          const TrainOptions& opt, std::uint64_t seed) {
  validate_hyperparams(hp);
  Environment env(env_cfg);
  PolicyDims dims{env_cfg.q, env.action_set().size(), opt.d_h, opt.n_hidden,
                  opt.family};
  AutoregressivePolicy policy(dims, seed);
  AdamState adam = make_adam_state(policy);
  BaselineEMA baseline{0.0, hp.ema};

  auto reward_of = opt.reward_fn
                       ? opt.reward_fn
                       : [&env, seed](const Trajectory& t, int iter, int k) {
                           auto rng = make_engine(seed, Stream::noise,
                                                  std::uint64_t(iter),
                                                  std::uint64_t(k));
                           return env.rollout(t, rng);
                         };
  auto eval_actions =
      opt.eval_fn ? opt.eval_fn
                  : [&env](const std::vector<HybridAction>& actions) {
                      return env.evaluate(actions);
                    };

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  AutoregressivePolicy best_policy = policy;
  double best_greedy = kNegInf;
  std::vector<HybridAction> best_greedy_actions;
  double best_sampled = kNegInf;
  std::vector<HybridAction> best_sampled_actions;
  double running_best = kNegInf;
  double total_wall = 0.0;

  std::vector<IterationStats> history;
  history.reserve(hp.total_iters);

  const int m = hp.batch_size;
  for (int iter = 0; iter < hp.total_iters; ++iter) {
    auto t0 = std::chrono::steady_clock::now();
    IterationStats stats;
    stats.iter = iter;
    stats.lr = staircase_lr(iter, hp);
    stats.temp = smooth_temp(iter, hp);

    std::vector<std::mt19937_64> engines;
    engines.reserve(m);
    for (int k = 0; k < m; ++k)
      engines.push_back(make_engine(seed, Stream::action, std::uint64_t(iter),
                                    std::uint64_t(k)));
    BatchActivations acts;
    std::vector<Trajectory> batch = policy.sample_batch(engines, &acts);

    Eigen::VectorXd returns(m), lpd_old(m), lpc_old(m);
    double max_ratio = kNegInf;
    int max_k = 0;
    for (int k = 0; k < m; ++k) {
      Reward rw = reward_of(batch[k], iter, k);
      if (!std::isfinite(rw.noisy_return) || !std::isfinite(rw.clean_return)) {
        std::ostringstream oss;
        oss << "non-finite reward at iteration " << iter << ", trajectory "
            << k << " (noisy=" << rw.noisy_return
            << ", clean=" << rw.clean_return
            << ", baseline=" << baseline.value << ")";
        throw std::runtime_error(oss.str());
      }
      double ret = rw.noisy_return;
      if (opt.train_continuous)
        ret += stats.temp * (-batch[k].log_prob_continuous);
      returns(k) = ret;
      lpd_old(k) = batch[k].log_prob_discrete;
      lpc_old(k) = batch[k].log_prob_continuous;
      stats.mean_noisy_return += rw.noisy_return / m;
      stats.mean_clean_ratio += rw.clean_energy_ratio / m;
      if (rw.clean_energy_ratio > max_ratio) {
        max_ratio = rw.clean_energy_ratio;
        max_k = k;
      }
    }
    stats.max_clean_ratio = max_ratio;
    if (max_ratio > best_sampled) {
      best_sampled = max_ratio;
      best_sampled_actions = batch[max_k].actions;
    }
    running_best = std::max(running_best, max_ratio);
    stats.best_clean_ratio = running_best;

    Eigen::VectorXd advantages = compute_advantages(returns, baseline);

    for (int epoch = 0; epoch < hp.ppo_epochs; ++epoch) {
      BatchActivations recomputed;
      const BatchActivations* cur = &acts;
      if (epoch > 0) {
        recomputed = policy.forward_batch(acts.x);
        cur = &recomputed;
      }
      HybridObjective obj = hybrid_objective(
          policy, *cur, batch, lpd_old, lpc_old, advantages, hp.eps_d,
          hp.eps_c, stats.temp, opt.train_continuous);
      if (epoch == 0) stats.discrete_entropy = obj.mean_entropy;
      stats.kl = obj.kl_d + obj.kl_c;
      if (hp.grad_clip > 0.0) clip_global_norm(obj.grads, hp.grad_clip);
      adam_step(policy, obj.grads, adam, stats.lr);
    }

    Reward greedy = eval_actions(policy.greedy_actions());
    stats.greedy_ratio = greedy.clean_energy_ratio;
    if (greedy.clean_energy_ratio > best_greedy) {
      best_greedy = greedy.clean_energy_ratio;
      best_policy = policy;
      best_greedy_actions = policy.greedy_actions();
    }

    auto t1 = std::chrono::steady_clock::now();
    stats.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    total_wall += stats.wall_ms;
    history.push_back(stats);
  }

  if (!opt.checkpoint_path.empty()) {
    std::ostringstream tag;
    tag << "seed=" << seed << ";iters=" << hp.total_iters;
    save_checkpoint(opt.checkpoint_path, best_policy, adam, tag.str(),
                    hp.total_iters);
  }

  TrainResult res{std::move(history),
                  std::move(policy),
                  std::move(best_policy),
                  best_greedy,
                  std::move(best_greedy_actions),
                  best_sampled,
                  std::move(best_sampled_actions),
                  total_wall};
  return res;
}

void write_training_log(std::ostream& out,
                        const std::vector<IterationStats>& history,
                        const std::string& algorithm) {
  out << "algorithm,iter,lr,temp,mean_clean_ratio,max_clean_ratio,"
         "best_clean_ratio,mean_noisy_return,discrete_entropy,kl,"
         "greedy_ratio\n";
  char buf[512];
  for (const auto& s : history) {
    std::snprintf(buf, sizeof buf,
                  "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g\n",
                  algorithm.c_str(), s.iter, s.lr, s.temp, s.mean_clean_ratio,
                  s.max_clean_ratio, s.best_clean_ratio, s.mean_noisy_return,
                  s.discrete_entropy, s.kl, s.greedy_ratio);
    out << buf;
  }
}

}  // namespace rlqaoa
