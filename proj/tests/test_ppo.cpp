#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

#include "rlqaoa/ppo.hpp"
#include "rlqaoa/rng.hpp"

using namespace rlqaoa;

namespace {

void randomize_params(AutoregressivePolicy& pol, std::mt19937_64& rng,
                      double scale = 0.4) {
  std::uniform_real_distribution<double> unif(-scale, scale);
  for (auto& m : pol.params().mats)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = unif(rng);
  for (auto& v : pol.params().vecs)
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = unif(rng);
  pol.enforce_masks();
}

std::vector<std::mt19937_64> engines(std::uint64_t master, int m) {
  std::vector<std::mt19937_64> out;
  out.reserve(m);
  for (int k = 0; k < m; ++k)
    out.push_back(make_engine(master, Stream::action, 0, k));
  return out;
}

double objective_value(const AutoregressivePolicy& pol,
                       const Eigen::MatrixXd& x,
                       const std::vector<Trajectory>& batch,
                       const Eigen::VectorXd& lpd_old,
                       const Eigen::VectorXd& lpc_old,
                       const Eigen::VectorXd& adv, double eps_d, double eps_c,
                       double temp) {
  auto acts = pol.forward_batch(x);
  return hybrid_objective(pol, acts, batch, lpd_old, lpc_old, adv, eps_d,
                          eps_c, temp)
      .value;
}

EnvConfig tiny_env() {
  EnvConfig cfg;
  cfg.ising.n_sites = 2;
  cfg.total_T = 10.0;
  cfg.q = 4;
  cfg.action_labels = {"H1", "H2", "Y"};
  return cfg;
}

}  // namespace

TEST_CASE("annealing schedules") {
  PPOHyperparams hp;
  CHECK(staircase_lr(0, hp) == 5e-4);
  CHECK(smooth_temp(0, hp) == 0.1);
  CHECK(staircase_lr(49, hp) == 5e-4);
  CHECK(staircase_lr(50, hp) == doctest::Approx(4.9e-4).epsilon(1e-12));
  CHECK(staircase_lr(99, hp) == doctest::Approx(4.9e-4).epsilon(1e-12));
  CHECK(staircase_lr(100, hp) ==
        doctest::Approx(5e-4 * 0.98 * 0.98).epsilon(1e-12));
  CHECK(smooth_temp(50, hp) == doctest::Approx(9.9e-2).epsilon(1e-12));
  CHECK(smooth_temp(25, hp) ==
        doctest::Approx(0.1 * std::pow(0.99, 0.5)).epsilon(1e-12));
  CHECK(smooth_temp(49, hp) < smooth_temp(48, hp));  // smooth, not staircase
  CHECK_THROWS_AS(staircase_lr(-1, hp), std::invalid_argument);
}

TEST_CASE("advantages use the pre-update baseline, then EMA-update it") {
  BaselineEMA b{0.0, 0.95};
  Eigen::VectorXd r1(4);
  r1 << 1.0, 2.0, 3.0, 4.0;
  Eigen::VectorXd a1 = compute_advantages(r1, b);
  for (int k = 0; k < 4; ++k) CHECK(a1(k) == r1(k));  // first batch: R-hat = 0
  CHECK(b.value == (1.0 - 0.95) * 2.5);
  CHECK(a1.mean() == doctest::Approx(r1.mean() - 0.0).epsilon(1e-15));

  // Exact recurrence on a synthetic stream.
  const double m = 0.9;
  BaselineEMA s{0.0, m};
  auto rng = make_engine(3, Stream::misc);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  double expected = 0.0;
  for (int t = 0; t < 30; ++t) {
    Eigen::VectorXd r(5);
    for (int k = 0; k < 5; ++k) r(k) = unif(rng);
    Eigen::VectorXd a = compute_advantages(r, s);
    for (int k = 0; k < 5; ++k) CHECK(a(k) == r(k) - expected);
    expected = m * expected + (1.0 - m) * r.mean();
    CHECK(s.value == expected);
  }

  // Constant returns: the advantage decays geometrically toward zero.
  BaselineEMA c{0.0, 0.95};
  const double ret = 3.0;
  Eigen::VectorXd rc = Eigen::VectorXd::Constant(2, ret);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd a = compute_advantages(rc, c);
    CHECK(a(0) == doctest::Approx(ret * std::pow(0.95, t)).epsilon(1e-12));
  }

  // A constant shift absorbed by the baseline leaves advantages unchanged.
  BaselineEMA plain{0.4, 0.95}, shifted{0.4 + 7.0, 0.95};
  Eigen::VectorXd base(3);
  base << 0.1, -0.5, 0.9;
  Eigen::VectorXd shifted_r = base.array() + 7.0;
  Eigen::VectorXd a_plain = compute_advantages(base, plain);
  Eigen::VectorXd a_shift = compute_advantages(shifted_r, shifted);
  for (int k = 0; k < 3; ++k)
    CHECK(a_plain(k) == doctest::Approx(a_shift(k)).epsilon(1e-14));
}

TEST_CASE("clipped surrogate term and its log-prob derivative") {
  CHECK(clipped_term(1.0, 2.5, 0.1) == 2.5);
  CHECK(clipped_term(1.5, 1.0, 0.1) == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(clipped_term(0.5, -1.0, 0.1) == doctest::Approx(-0.9).epsilon(1e-15));
  CHECK(clipped_term(1.05, 1.0, 0.1) == doctest::Approx(1.05).epsilon(1e-15));

  CHECK(importance_ratio(0.3, 0.3) == 1.0);
  CHECK(importance_ratio(1.0, 0.0) == doctest::Approx(std::exp(1.0)));
  CHECK(importance_ratio(30.0, 0.0) == doctest::Approx(std::exp(20.0)));
  CHECK(importance_ratio(0.0, 30.0) == doctest::Approx(std::exp(-20.0)));

  // Clip binds -> zero derivative; otherwise ratio * advantage.
  double lp_old = -1.0;
  double lp_hi = lp_old + std::log(1.5);
  CHECK(clipped_term_dlogp(lp_hi, lp_old, 1.0, 0.1) == 0.0);
  CHECK(clipped_term_dlogp(lp_hi, lp_old, -1.0, 0.1) ==
        doctest::Approx(-1.5).epsilon(1e-12));
  double lp_lo = lp_old + std::log(0.5);
  CHECK(clipped_term_dlogp(lp_lo, lp_old, -1.0, 0.1) == 0.0);
  CHECK(clipped_term_dlogp(lp_lo, lp_old, 1.0, 0.1) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(clipped_term_dlogp(lp_old, lp_old, 2.0, 0.1) == 2.0);
  CHECK(clipped_term_dlogp(lp_old + 25.0, lp_old, -1.0, 0.1) == 0.0);
}

TEST_CASE("objective at the snapshot equals the mean advantage per term") {
  PolicyDims d{3, 3, 6, 2};
  AutoregressivePolicy pol(d, 41);
  auto rng = make_engine(41, Stream::misc);
  randomize_params(pol, rng);
  auto rngs = engines(43, 8);
  BatchActivations acts;
  auto batch = pol.sample_batch(rngs, &acts);
  Eigen::VectorXd lpd_old, lpc_old;
  pol.batch_log_probs(acts, batch, lpd_old, lpc_old);
  Eigen::VectorXd adv(8);
  adv << 0.5, -0.2, 1.0, 0.3, -0.7, 0.1, 0.9, -0.4;

  auto obj = hybrid_objective(pol, acts, batch, lpd_old, lpc_old, adv, 0.001,
                              0.1, 0.0);
  CHECK(obj.surrogate_d == doctest::Approx(adv.mean()).epsilon(1e-12));
  CHECK(obj.surrogate_c == doctest::Approx(adv.mean()).epsilon(1e-12));
  CHECK(obj.value == doctest::Approx(2.0 * adv.mean()).epsilon(1e-12));
  CHECK(obj.kl_d == 0.0);
  CHECK(obj.kl_c == 0.0);
  CHECK(obj.entropy_term == 0.0);
  CHECK(obj.mean_entropy > 0.0);

  // Discrete-only mode: continuous surrogate dropped, its heads untouched.
  auto obj_d = hybrid_objective(pol, acts, batch, lpd_old, lpc_old, adv, 0.1,
                                0.1, 0.0, false);
  CHECK(obj_d.value == doctest::Approx(adv.mean()).epsilon(1e-12));
  CHECK(obj_d.surrogate_c == 0.0);
  const int l = d.n_hidden;
  CHECK(obj_d.grads.mats[l + 1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(obj_d.grads.mats[l + 2].cwiseAbs().maxCoeff() == 0.0);
  CHECK(obj_d.grads.vecs[l + 1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(obj_d.grads.vecs[l + 2].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("PPO objective gradients match finite differences") {
  for (auto family :
       {ContinuousFamily::sigmoid_gaussian, ContinuousFamily::beta}) {
    PolicyDims d{2, 3, 4, 2, family};
    AutoregressivePolicy pol(d, 47);
    auto rng = make_engine(47, Stream::misc);
    randomize_params(pol, rng);
    auto rngs = engines(53, 4);
    BatchActivations acts;
    auto batch = pol.sample_batch(rngs, &acts);
    Eigen::VectorXd lpd_old, lpc_old;
    pol.batch_log_probs(acts, batch, lpd_old, lpc_old);
    Eigen::VectorXd adv(4);
    adv << 1.3, -0.8, 0.4, -1.1;
    const double eps_d = 0.05, eps_c = 0.08, temp = 0.25;

    // Second base point: large ascent steps so some trajectories clip out.
    auto adam = make_adam_state(pol);
    for (int it = 0; it < 3; ++it) {
      auto cur = pol.forward_batch(acts.x);
      auto obj = hybrid_objective(pol, cur, batch, lpd_old, lpc_old, adv,
                                  eps_d, eps_c, temp);
      adam_step(pol, obj.grads, adam, 0.3);
    }
    auto cur = pol.forward_batch(acts.x);
    auto obj = hybrid_objective(pol, cur, batch, lpd_old, lpc_old, adv, eps_d,
                                eps_c, temp);
    Eigen::VectorXd lpd_new, lpc_new;
    pol.batch_log_probs(cur, batch, lpd_new, lpc_new);
    bool any_clipped = false;
    for (int k = 0; k < 4; ++k)
      if (clipped_term_dlogp(lpd_new(k), lpd_old(k), adv(k), eps_d) == 0.0)
        any_clipped = true;
    CHECK(any_clipped);

    const double h = 1e-6;
    int checked = 0;
    for (std::size_t t = 0; t < pol.params().mats.size(); ++t) {
      auto& m = pol.params().mats[t];
      for (int rep = 0; rep < 4; ++rep) {
        int r = std::uniform_int_distribution<int>(0, int(m.rows()) - 1)(rng);
        int c = std::uniform_int_distribution<int>(0, int(m.cols()) - 1)(rng);
        double saved = m(r, c);
        m(r, c) = saved + h;
        double fp = objective_value(pol, acts.x, batch, lpd_old, lpc_old, adv,
                                    eps_d, eps_c, temp);
        m(r, c) = saved - h;
        double fm = objective_value(pol, acts.x, batch, lpd_old, lpc_old, adv,
                                    eps_d, eps_c, temp);
        m(r, c) = saved;
        double fd = (fp - fm) / (2.0 * h);
        double an = obj.grads.mats[t](r, c);
        CHECK(std::abs(an - fd) <=
              1e-4 * std::max({1.0, std::abs(an), std::abs(fd)}));
        ++checked;
      }
    }
    for (std::size_t t = 0; t < pol.params().vecs.size(); ++t) {
      auto& v = pol.params().vecs[t];
      for (int rep = 0; rep < 2; ++rep) {
        int i = std::uniform_int_distribution<int>(0, int(v.size()) - 1)(rng);
        double saved = v(i);
        v(i) = saved + h;
        double fp = objective_value(pol, acts.x, batch, lpd_old, lpc_old, adv,
                                    eps_d, eps_c, temp);
        v(i) = saved - h;
        double fm = objective_value(pol, acts.x, batch, lpd_old, lpc_old, adv,
                                    eps_d, eps_c, temp);
        v(i) = saved;
        double fd = (fp - fm) / (2.0 * h);
        double an = obj.grads.vecs[t](i);
        CHECK(std::abs(an - fd) <=
              1e-4 * std::max({1.0, std::abs(an), std::abs(fd)}));
        ++checked;
      }
    }
    CHECK(checked >= 20);
  }
}

TEST_CASE("vanishing discrete clip radius freezes the discrete heads") {
  // One step, two actions: the net sees no input, so all trajectories share
  // one logit pair and each ratio moves exactly in its advantage direction.
  // That makes every advantage carry the binding sign after the first epoch.
  PolicyDims d{1, 2, 6, 2};
  AutoregressivePolicy pol(d, 59);
  auto rng = make_engine(59, Stream::misc);
  randomize_params(pol, rng);
  auto rngs = engines(61, 8);
  BatchActivations acts;
  auto batch = pol.sample_batch(rngs, &acts);
  Eigen::VectorXd lpd_old, lpc_old;
  pol.batch_log_probs(acts, batch, lpd_old, lpc_old);
  Eigen::VectorXd adv(8);
  for (int k = 0; k < 8; ++k)
    adv(k) = batch[k].actions[0].discrete == 0 ? 1.0 : -1.0;
  const double eps_d = 1e-8;

  // First inner epoch moves freely (all ratios start at 1)...
  auto adam = make_adam_state(pol);
  auto first = hybrid_objective(pol, acts, batch, lpd_old, lpc_old, adv,
                                eps_d, 0.1, 0.0);
  const int l = d.n_hidden;
  CHECK(first.grads.mats[l + 0].cwiseAbs().maxCoeff() > 0.0);
  adam_step(pol, first.grads, adam, 1e-2);

  // ...after which every moved ratio is outside the clip radius with the
  // binding sign, so the discrete-head gradients vanish.
  auto cur = pol.forward_batch(acts.x);
  auto second = hybrid_objective(pol, cur, batch, lpd_old, lpc_old, adv,
                                 eps_d, 0.1, 0.0);
  CHECK(second.grads.mats[l + 0].cwiseAbs().maxCoeff() < 1e-10);
  CHECK(second.grads.vecs[l + 0].cwiseAbs().maxCoeff() < 1e-10);
  // Continuous heads keep learning (eps_c is not vanishing).
  CHECK(second.grads.mats[l + 1].cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("soft trust region: ratios stay in band or contribute no gradient") {
  PolicyDims d{3, 3, 8, 2};
  AutoregressivePolicy pol(d, 67);
  auto rng = make_engine(67, Stream::misc);
  randomize_params(pol, rng);
  auto rngs = engines(71, 16);
  BatchActivations acts;
  auto batch = pol.sample_batch(rngs, &acts);
  Eigen::VectorXd lpd_old, lpc_old;
  pol.batch_log_probs(acts, batch, lpd_old, lpc_old);
  Eigen::VectorXd adv(16);
  auto arng = make_engine(73, Stream::misc);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int k = 0; k < 16; ++k) adv(k) = unif(arng);
  const double eps_d = 0.05;

  auto adam = make_adam_state(pol);
  for (int epoch = 0; epoch < 4; ++epoch) {
    auto cur = pol.forward_batch(acts.x);
    auto obj =
        hybrid_objective(pol, cur, batch, lpd_old, lpc_old, adv, eps_d, 0.1,
                         0.0);
    adam_step(pol, obj.grads, adam, 1e-3);
    auto post = pol.forward_batch(acts.x);
    Eigen::VectorXd lpd_new, lpc_new;
    pol.batch_log_probs(post, batch, lpd_new, lpc_new);
    for (int k = 0; k < 16; ++k) {
      double ratio = importance_ratio(lpd_new(k), lpd_old(k));
      bool in_band = ratio >= 1.0 - eps_d - 0.05 && ratio <= 1.0 + eps_d + 0.05;
      bool no_grad =
          clipped_term_dlogp(lpd_new(k), lpd_old(k), adv(k), eps_d) == 0.0;
      CHECK((in_band || no_grad));
    }
  }
}

TEST_CASE("pure entropy ascent restores the uniform policy") {
  PolicyDims d{2, 3, 8, 2};
  AutoregressivePolicy pol(d, 79);
  auto rng = make_engine(79, Stream::misc);
  randomize_params(pol, rng, 0.8);
  auto adam = make_adam_state(pol);
  Eigen::VectorXd zero_adv = Eigen::VectorXd::Zero(32);
  double final_entropy = 0.0;
  for (int it = 0; it < 300; ++it) {
    auto rngs = engines(1000 + it, 32);
    BatchActivations acts;
    auto batch = pol.sample_batch(rngs, &acts);
    Eigen::VectorXd lpd_old, lpc_old;
    pol.batch_log_probs(acts, batch, lpd_old, lpc_old);
    auto obj = hybrid_objective(pol, acts, batch, lpd_old, lpc_old, zero_adv,
                                0.1, 0.1, 10.0);
    adam_step(pol, obj.grads, adam, 1e-2);
    final_entropy = obj.mean_entropy;
  }
  double max_entropy = std::log(3.0) + std::log(2.0);
  CHECK(final_entropy == doctest::Approx(max_entropy).epsilon(1e-2));
}

TEST_CASE("gradient norm clipping") {
  PolicyDims d{2, 3, 4, 2};
  AutoregressivePolicy pol(d, 83);
  auto g = pol.zero_like();
  g.mats[0](1, 0) = 3.0;
  g.vecs[0](2) = 4.0;
  CHECK(global_norm(g) == doctest::Approx(5.0).epsilon(1e-15));
  clip_global_norm(g, 10.0);
  CHECK(global_norm(g) == doctest::Approx(5.0).epsilon(1e-15));  // untouched
  clip_global_norm(g, 1.0);
  CHECK(global_norm(g) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.mats[0](1, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK_THROWS_AS(clip_global_norm(g, 0.0), std::invalid_argument);
}

TEST_CASE("two-armed bandit converges fast") {
  EnvConfig cfg;
  cfg.ising.n_sites = 2;
  cfg.q = 1;
  cfg.action_labels = {"H1", "H2"};

  PPOHyperparams hp;
  hp.batch_size = 64;
  hp.lr = 0.05;
  hp.eps_d = 0.2;
  hp.entropy_temp = 0.0;
  hp.total_iters = 100;

  TrainOptions opt;
  opt.d_h = 8;
  opt.train_continuous = false;
  opt.reward_fn = [](const Trajectory& t, int, int) {
    Reward r;
    r.noisy_return = t.actions[0].discrete == 0 ? 1.0 : 0.0;
    r.clean_return = r.noisy_return;
    r.clean_energy_ratio = r.noisy_return;
    return r;
  };
  opt.eval_fn = [](const std::vector<HybridAction>& a) {
    Reward r;
    r.clean_energy_ratio = a[0].discrete == 0 ? 1.0 : 0.0;
    r.clean_return = r.clean_energy_ratio;
    r.noisy_return = r.clean_return;
    return r;
  };

  auto res = train_rl_qaoa(cfg, hp, opt, 12345);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  double p0 = std::exp(res.policy.forward(x, 0).log_probs(0));
  CHECK(p0 > 0.99);
  // History best is non-decreasing by construction.
  for (std::size_t i = 1; i < res.history.size(); ++i)
    CHECK(res.history[i].best_clean_ratio >=
          res.history[i - 1].best_clean_ratio);
}

TEST_CASE("training on the physical environment is deterministic") {
  EnvConfig cfg = tiny_env();
  cfg.noise = {NoiseKind::classical_gaussian, 0.2};
  PPOHyperparams hp;
  hp.batch_size = 16;
  hp.total_iters = 12;
  TrainOptions opt;
  opt.d_h = 12;

  auto a = train_rl_qaoa(cfg, hp, opt, 777);
  auto b = train_rl_qaoa(cfg, hp, opt, 777);
  std::ostringstream log_a, log_b;
  write_training_log(log_a, a.history, "rl-qaoa");
  write_training_log(log_b, b.history, "rl-qaoa");
  CHECK(log_a.str() == log_b.str());
  CHECK(log_a.str().find("algorithm,iter,lr,temp") == 0);

  auto c = train_rl_qaoa(cfg, hp, opt, 778);
  std::ostringstream log_c;
  write_training_log(log_c, c.history, "rl-qaoa");
  CHECK(log_a.str() != log_c.str());

  REQUIRE(a.history.size() == 12);
  double best_greedy = -1e300;
  for (const auto& s : a.history) {
    CHECK(std::isfinite(s.mean_clean_ratio));
    CHECK(std::isfinite(s.mean_noisy_return));
    CHECK(std::isfinite(s.kl));
    CHECK(s.discrete_entropy > 0.0);
    CHECK(s.max_clean_ratio >= s.mean_clean_ratio);
    CHECK(s.best_clean_ratio >= s.max_clean_ratio - 1e-15);
    best_greedy = std::max(best_greedy, s.greedy_ratio);
  }
  CHECK(a.best_greedy_ratio == best_greedy);
  CHECK(a.best_sampled_ratio == a.history.back().best_clean_ratio);
}

TEST_CASE("training writes a loadable best checkpoint") {
  EnvConfig cfg = tiny_env();
  PPOHyperparams hp;
  hp.batch_size = 8;
  hp.total_iters = 5;
  TrainOptions opt;
  opt.d_h = 8;
  opt.checkpoint_path = "ppo_best_checkpoint.bin";
  auto res = train_rl_qaoa(cfg, hp, opt, 901);
  auto ck = load_checkpoint("ppo_best_checkpoint.bin");
  CHECK(ck.dims.q == 4);
  CHECK(ck.dims.n_actions == 3);
  CHECK(ck.iteration == 5);
  for (std::size_t i = 0; i < ck.params.mats.size(); ++i)
    CHECK((ck.params.mats[i] - res.best_policy.params().mats[i])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  std::remove("ppo_best_checkpoint.bin");
}

TEST_CASE("hyperparameter validation") {
  EnvConfig cfg = tiny_env();
  TrainOptions opt;
  PPOHyperparams hp;
  hp.batch_size = 0;
  CHECK_THROWS_AS(train_rl_qaoa(cfg, hp, opt, 1), std::invalid_argument);
  hp = {};
  hp.ema = 1.0;
  CHECK_THROWS_AS(train_rl_qaoa(cfg, hp, opt, 1), std::invalid_argument);
  hp = {};
  hp.eps_d = 0.0;
  CHECK_THROWS_AS(train_rl_qaoa(cfg, hp, opt, 1), std::invalid_argument);
  hp = {};
  hp.ppo_epochs = 0;
  CHECK_THROWS_AS(train_rl_qaoa(cfg, hp, opt, 1), std::invalid_argument);
}
