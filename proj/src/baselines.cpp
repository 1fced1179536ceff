#include "rlqaoa/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rlqaoa/distributions.hpp"
#include "rlqaoa/rng.hpp"

namespace rlqaoa {

namespace {

// Raw durations of exactly zero are unphysical for the normalizer; grid and
// solver closures lift them to this floor (a step of ~1e-6 * T / sum).
constexpr double kRawFloor = 1e-6;

struct LineMin {
  double t = 0.0;
  double f = 0.0;
};

// Brent's derivative-free local minimization on [a, b] (golden section with
// parabolic interpolation), never evaluating the endpoints themselves.
LineMin brent_min(const std::function<double(double)>& g, double a, double b,
                  double tol_abs, long long& evals) {
  constexpr double kGold = 0.3819660112501051;
  constexpr double kEps = 1e-12;
  double x = a + kGold * (b - a), w = x, v = x;
  double fx = g(x);
  ++evals;
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < 100; ++it) {
    double xm = 0.5 * (a + b);
    double tol1 = tol_abs + kEps * std::abs(x);
    double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool parabolic = false;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) &&
          p < q * (b - x)) {
        parabolic = true;
        d = p / q;
        double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (xm > x) ? tol1 : -tol1;
      }
    }
    if (!parabolic) {
      e = (x >= xm) ? a - x : b - x;
      d = kGold * e;
    }
    double u = (std::abs(d) >= tol1) ? x + d : x + ((d > 0.0) ? tol1 : -tol1);
    double fu = g(u);
    ++evals;
    if (fu <= fx) {
      if (u >= x) a = x;
      else b = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x) a = u;
      else b = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return {x, fx};
}

void clamp_into_box(Eigen::VectorXd& x, const PowellConfig& cfg) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x(i) = std::clamp(x(i), cfg.lower, cfg.upper);
}

// Minimizes f along x + t * dir over the feasible t-segment; accepts the
// step only on strict decrease.  Returns whether x moved.
bool line_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                   Eigen::VectorXd& x, double& fx, const Eigen::VectorXd& dir,
                   const PowellConfig& cfg, long long& evals) {
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(dir(i)) < 1e-14) continue;
    double lo = (cfg.lower - x(i)) / dir(i);
    double hi = (cfg.upper - x(i)) / dir(i);
    if (lo > hi) std::swap(lo, hi);
    t_lo = std::max(t_lo, lo);
    t_hi = std::min(t_hi, hi);
  }
  if (!std::isfinite(t_lo) || !std::isfinite(t_hi) || t_hi - t_lo < 1e-12)
    return false;
  auto g = [&](double t) {
    Eigen::VectorXd p = x + t * dir;
    clamp_into_box(p, cfg);
    return f(p);
  };
  double tol_t =
      std::max(1e-10, 0.25 * cfg.x_tol / std::max(1.0, dir.cwiseAbs().maxCoeff()));
  LineMin lm = brent_min(g, t_lo, t_hi, tol_t, evals);
  if (lm.f < fx) {
    x += lm.t * dir;
    clamp_into_box(x, cfg);
    fx = lm.f;
    return true;
  }
  return false;
}

std::vector<int> alternating_sequence(int steps, int first) {
  std::vector<int> seq(steps);
  for (int j = 0; j < steps; ++j) seq[j] = (j % 2 == 0) ? first : 1 - first;
  return seq;
}

std::vector<HybridAction> make_actions(const std::vector<int>& seq,
                                       const Eigen::VectorXd& raw) {
  std::vector<HybridAction> acts(seq.size());
  for (std::size_t j = 0; j < seq.size(); ++j)
    acts[j] = {seq[j], std::clamp(raw(Eigen::Index(j)), kRawFloor, 1.0)};
  return acts;
}

std::vector<HybridAction> make_actions(const std::vector<int>& seq,
                                       const std::vector<double>& raw) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(
      raw.data(), Eigen::Index(raw.size()));
  return make_actions(seq, v);
}

Eigen::VectorXd random_box_point(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x(i) = unif(rng);
  return x;
}

}  // namespace

PowellResult powell_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const PowellConfig& cfg) {
  if (!(cfg.x_tol > 0.0) || !(cfg.f_tol > 0.0))
    throw std::invalid_argument("Powell tolerances must be positive");
  if (!(cfg.lower < cfg.upper))
    throw std::invalid_argument("Powell box is empty");
  const int n = int(x0.size());
  if (n == 0) throw std::invalid_argument("empty start point");
  for (int i = 0; i < n; ++i)
    if (x0(i) < cfg.lower - 1e-12 || x0(i) > cfg.upper + 1e-12)
      throw std::invalid_argument("start point outside the box");

  const int max_ls = cfg.max_line_searches > 0 ? cfg.max_line_searches
                                               : 200 * n;
  Eigen::MatrixXd dirs = Eigen::MatrixXd::Identity(n, n);
  PowellResult res;
  res.x = x0;
  clamp_into_box(res.x, cfg);
  res.f = f(res.x);
  res.evals = 1;
  int line_searches = 0;

  while (true) {
    const Eigen::VectorXd x_start = res.x;
    const double f_start = res.f;
    double delta_max = 0.0;
    int i_max = 0;
    for (int i = 0; i < n; ++i) {
      if (line_searches >= max_ls) {
        res.converged = false;
        return res;
      }
      double before = res.f;
      line_minimize(f, res.x, res.f, dirs.col(i), cfg, res.evals);
      ++line_searches;
      if (before - res.f > delta_max) {
        delta_max = before - res.f;
        i_max = i;
      }
    }
    ++res.sweeps;

    if (2.0 * (f_start - res.f) <=
            cfg.f_tol * (std::abs(f_start) + std::abs(res.f)) + 1e-25 ||
        (res.x - x_start).cwiseAbs().maxCoeff() <= cfg.x_tol)
      return res;

    // Powell's 1964 criterion: replace the direction of largest decrease
    // with the sweep displacement when the extrapolated point warrants it.
    Eigen::VectorXd x_e = 2.0 * res.x - x_start;
    clamp_into_box(x_e, cfg);
    double f_e = f(x_e);
    ++res.evals;
    if (f_e >= f_start) continue;
    double d1 = f_start - res.f - delta_max;
    double d2 = f_start - f_e;
    double crit = 2.0 * (f_start - 2.0 * res.f + f_e) * d1 * d1 -
                  delta_max * d2 * d2;
    if (crit >= 0.0) continue;
    Eigen::VectorXd new_dir = res.x - x_start;
    double norm = new_dir.norm();
    if (norm < 1e-14) continue;
    new_dir /= norm;
    if (line_searches >= max_ls) {
      res.converged = false;
      return res;
    }
    if (line_minimize(f, res.x, res.f, new_dir, cfg, res.evals)) {
      dirs.col(i_max) = dirs.col(n - 1);
      dirs.col(n - 1) = new_dir;
    }
    ++line_searches;
  }
}

QAOAResult qaoa_optimize(const EnvConfig& cfg, int p_depth, int restarts,
                         std::uint64_t seed, const PowellConfig& powell) {
  if (p_depth < 0) throw std::invalid_argument("negative QAOA depth");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");

  EnvConfig qcfg = cfg;
  qcfg.action_labels = {"H1", "H2"};
  qcfg.q = std::max(1, 2 * p_depth);
  Environment env(qcfg);

  if (p_depth == 0) {
    QuantumState init = QuantumState::all_up(cfg.ising.n_sites);
    double e0 = energy_density(init, env.hamiltonians().h, cfg.ising.n_sites);
    QAOAResult res;
    res.clean_ratio = e0 / env.ground_energy_density();
    res.noisy_objective = -e0;
    return res;
  }

  const int dim = 2 * p_depth;
  QAOAResult best;
  best.clean_ratio = -std::numeric_limits<double>::infinity();
  long long evals = 0;

  for (int ordering = 0; ordering < 2; ++ordering) {
    std::vector<int> seq = alternating_sequence(dim, ordering);
    double best_f = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;
    for (int r = 0; r < restarts; ++r) {
      auto init_rng = make_engine(seed, Stream::init, ordering, r);
      auto noise_rng = make_engine(seed, Stream::noise, ordering, r);
      auto objective = [&](const Eigen::VectorXd& x) {
        Trajectory traj;
        traj.actions = make_actions(seq, x);
        return -env.rollout(traj, noise_rng).noisy_return;
      };
      Eigen::VectorXd x0 = random_box_point(dim, init_rng);
      PowellResult pr = powell_minimize(objective, x0, powell);
      evals += pr.evals;
      if (pr.f < best_f) {
        best_f = pr.f;
        best_x = pr.x;
      }
    }
    auto actions = make_actions(seq, best_x);
    double ratio = env.evaluate(actions).clean_energy_ratio;
    if (ratio > best.clean_ratio) {
      best.sequence = seq;
      std::vector<double> raw(static_cast<std::size_t>(dim));
      for (int j = 0; j < dim; ++j) raw[size_t(j)] = actions[size_t(j)].continuous;
      best.durations = normalize_durations(raw, cfg.total_T);
      best.clean_ratio = ratio;
      best.noisy_objective = -best_f;
    }
  }
  best.evals = evals;
  return best;
}

PGQAOAResult pg_qaoa_train(const EnvConfig& cfg, const PPOHyperparams& hp,
                           ContinuousFamily family, std::uint64_t seed) {
  validate_hyperparams(hp);
  EnvConfig pcfg = cfg;
  pcfg.action_labels = {"H1", "H2"};
  Environment env(pcfg);
  const int q = pcfg.q;
  const int m = hp.batch_size;
  const std::vector<int> seq = alternating_sequence(q, 0);

  // Raw parameters: kappa and xi per step, zero-initialized so the initial
  // distributions are symmetric around duration T/q.
  ParamSet params;
  params.vecs = {Eigen::VectorXd::Zero(q), Eigen::VectorXd::Zero(q)};
  AdamState adam = make_adam_state(params);

  constexpr double kFloor = AutoregressivePolicy::kXiFloor;
  constexpr double kCeil = AutoregressivePolicy::kXiCeil;
  auto kappa_eff = [&](int j) {
    double raw = params.vecs[0](j);
    return family == ContinuousFamily::beta
               ? std::clamp(std::exp(raw), kFloor, kCeil)
               : raw;
  };
  auto xi_eff = [&](int j) {
    return std::clamp(std::exp(params.vecs[1](j)), kFloor, kCeil);
  };
  auto log_prob = [&](int j, double v) {
    return family == ContinuousFamily::beta
               ? beta_log_prob(v, {kappa_eff(j), xi_eff(j)})
               : sg_log_prob(v, {kappa_eff(j), xi_eff(j)});
  };
  auto grad_log_prob = [&](int j, double v) {
    return family == ContinuousFamily::beta
               ? beta_grad_log_prob(v, {kappa_eff(j), xi_eff(j)})
               : sg_grad_log_prob(v, {kappa_eff(j), xi_eff(j)});
  };
  auto greedy_raw = [&](int j) {
    double k = kappa_eff(j), x = xi_eff(j);
    return family == ContinuousFamily::beta ? clamp_unit(k / (k + x))
                                            : clamp_unit(sigmoid(k));
  };

  PGQAOAResult res;
  res.sequence = seq;
  res.best_greedy_ratio = -std::numeric_limits<double>::infinity();
  res.best_sampled_ratio = -std::numeric_limits<double>::infinity();
  BaselineEMA baseline{0.0, hp.ema};
  const auto t_total = std::chrono::steady_clock::now();

  for (int iter = 0; iter < hp.total_iters; ++iter) {
    const double lr = staircase_lr(iter, hp);
    const double temp = smooth_temp(iter, hp);
    const auto t_iter = std::chrono::steady_clock::now();

    Eigen::MatrixXd values(q, m);
    Eigen::VectorXd lpc(m), returns(m);
    IterationStats stats;
    stats.iter = iter;
    stats.lr = lr;
    stats.temp = temp;
    stats.max_clean_ratio = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      auto arng = make_engine(seed, Stream::action, iter, k);
      auto nrng = make_engine(seed, Stream::noise, iter, k);
      double lp = 0.0;
      for (int j = 0; j < q; ++j) {
        double v = family == ContinuousFamily::beta
                       ? beta_sample({kappa_eff(j), xi_eff(j)}, arng)
                       : sg_sample({kappa_eff(j), xi_eff(j)}, arng);
        values(j, k) = v;
        lp += log_prob(j, v);
      }
      lpc(k) = lp;
      Trajectory traj;
      traj.actions = make_actions(seq, values.col(k));
      Reward rw = env.rollout(traj, nrng);
      returns(k) = rw.noisy_return + temp * (-lp);
      stats.mean_clean_ratio += rw.clean_energy_ratio / m;
      stats.mean_noisy_return += rw.noisy_return / m;
      stats.max_clean_ratio =
          std::max(stats.max_clean_ratio, rw.clean_energy_ratio);
      res.best_sampled_ratio =
          std::max(res.best_sampled_ratio, rw.clean_energy_ratio);
    }
    stats.best_clean_ratio = res.best_sampled_ratio;

    Eigen::VectorXd adv = compute_advantages(returns, baseline);
    ParamSet grads;
    grads.vecs = {Eigen::VectorXd::Zero(q), Eigen::VectorXd::Zero(q)};
    for (int k = 0; k < m; ++k) {
      const double w = adv(k) / m;
      for (int j = 0; j < q; ++j) {
        GradPair g = grad_log_prob(j, values(j, k));
        double dk_raw, dx_raw;
        if (family == ContinuousFamily::beta) {
          double ke = kappa_eff(j);
          dk_raw = (ke > kFloor && ke < kCeil) ? g.first * ke : 0.0;
        } else {
          dk_raw = g.first;
        }
        double xe = xi_eff(j);
        dx_raw = (xe > kFloor && xe < kCeil) ? g.second * xe : 0.0;
        grads.vecs[0](j) += w * dk_raw;
        grads.vecs[1](j) += w * dx_raw;
      }
    }
    adam_step(params, grads, adam, lr);

    Eigen::VectorXd greedy(q);
    for (int j = 0; j < q; ++j) greedy(j) = greedy_raw(j);
    auto greedy_actions = make_actions(seq, greedy);
    Reward ge = env.evaluate(greedy_actions);
    stats.greedy_ratio = ge.clean_energy_ratio;
    if (ge.clean_energy_ratio > res.best_greedy_ratio) {
      res.best_greedy_ratio = ge.clean_energy_ratio;
      std::vector<double> raw(static_cast<std::size_t>(q));
      for (int j = 0; j < q; ++j) raw[size_t(j)] = greedy_actions[size_t(j)].continuous;
      res.best_greedy_durations = normalize_durations(raw, pcfg.total_T);
    }
    stats.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t_iter)
                        .count();
    res.history.push_back(stats);
  }
  res.kappa_raw = params.vecs[0];
  res.xi_raw = params.vecs[1];
  res.total_wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_total)
                          .count();
  return res;
}

SequenceSolve solve_sequence_durations(const Environment& env,
                                       const std::vector<int>& sequence,
                                       int restarts, std::uint64_t seed,
                                       const PowellConfig& powell) {
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  const int q = int(sequence.size());
  auto objective = [&](const Eigen::VectorXd& x) {
    return -env.evaluate(make_actions(sequence, x)).clean_return;
  };
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd x0;
    if (r == 0) {
      x0 = Eigen::VectorXd::Constant(q, 0.5);  // uniform durations
    } else {
      auto rng = make_engine(seed, Stream::init, r, 0x5e9);
      x0 = random_box_point(q, rng);
    }
    PowellResult pr = powell_minimize(objective, x0, powell);
    if (pr.f < best_f) {
      best_f = pr.f;
      best_x = pr.x;
    }
  }
  SequenceSolve out;
  auto actions = make_actions(sequence, best_x);
  out.raw.resize(size_t(q));
  for (int j = 0; j < q; ++j) out.raw[size_t(j)] = actions[size_t(j)].continuous;
  out.durations = normalize_durations(out.raw, env.config().total_T);
  out.clean_ratio = env.evaluate(actions).clean_energy_ratio;
  return out;
}

SequenceSolve solve_sequence_durations_noisy(const Environment& env,
                                             const std::vector<int>& sequence,
                                             int restarts, std::uint64_t seed,
                                             const PowellConfig& powell) {
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  // Disjoint from training streams, which tag (iter, k).
  constexpr std::uint64_t kEvalTag = std::uint64_t(1) << 62;
  const int q = int(sequence.size());
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (int r = 0; r < restarts; ++r) {
    auto noise_rng = make_engine(seed, Stream::noise, kEvalTag, r);
    auto objective = [&](const Eigen::VectorXd& x) {
      Trajectory t;
      t.actions = make_actions(sequence, x);
      return -env.rollout(t, noise_rng).noisy_return;
    };
    Eigen::VectorXd x0;
    if (r == 0) {
      x0 = Eigen::VectorXd::Constant(q, 0.5);  // uniform durations
    } else {
      auto rng = make_engine(seed, Stream::init, r, kEvalTag);
      x0 = random_box_point(q, rng);
    }
    PowellResult pr = powell_minimize(objective, x0, powell);
    if (pr.f < best_f) {
      best_f = pr.f;
      best_x = pr.x;
    }
  }
  SequenceSolve out;
  auto actions = make_actions(sequence, best_x);
  out.raw.resize(size_t(q));
  for (int j = 0; j < q; ++j)
    out.raw[size_t(j)] = actions[size_t(j)].continuous;
  out.durations = normalize_durations(out.raw, env.config().total_T);
  out.clean_ratio = env.evaluate(actions).clean_energy_ratio;
  return out;
}

CDQAOAResult cd_qaoa_train(const EnvConfig& cfg, const PPOHyperparams& hp,
                           const CDQAOAOptions& opt, std::uint64_t seed) {
  Environment env(cfg);
  PowellConfig inner = opt.inner;
  if (inner.max_line_searches == 0) inner.max_line_searches = 6 * cfg.q;

  TrainOptions topt;
  topt.d_h = opt.d_h;
  topt.n_hidden = opt.n_hidden;
  topt.train_continuous = false;
  topt.checkpoint_path = opt.checkpoint_path;
  topt.reward_fn = [&env, inner, seed](const Trajectory& t, int iter, int k) {
    auto nrng = make_engine(seed, Stream::noise, iter, k);
    std::vector<int> seq(t.actions.size());
    Eigen::VectorXd x0(Eigen::Index(t.actions.size()));
    for (std::size_t j = 0; j < t.actions.size(); ++j) {
      seq[j] = t.actions[j].discrete;
      x0(Eigen::Index(j)) = t.actions[j].continuous;
    }
    auto objective = [&](const Eigen::VectorXd& x) {
      Trajectory solved;
      solved.actions = make_actions(seq, x);
      return -env.rollout(solved, nrng).noisy_return;
    };
    PowellResult pr = powell_minimize(objective, x0, inner);
    Trajectory solved;
    solved.actions = make_actions(seq, pr.x);
    return env.rollout(solved, nrng);
  };
  // Greedy evaluation mirrors training conditions: the duration solve sees
  // the noisy objective, and only the metric is the clean evaluation of the
  // solved protocol.  The eval noise stream is fixed, so re-solving the best
  // sequence afterwards replays the winning evaluation exactly.
  topt.eval_fn = [&env, &opt, inner, seed](const std::vector<HybridAction>& a) {
    std::vector<int> seq(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) seq[j] = a[j].discrete;
    SequenceSolve s = solve_sequence_durations_noisy(env, seq,
                                                     opt.eval_restarts, seed,
                                                     inner);
    Reward r;
    r.clean_energy_ratio = s.clean_ratio;
    r.clean_return = -(s.clean_ratio * env.ground_energy_density());
    r.noisy_return = r.clean_return;
    return r;
  };

  CDQAOAResult out{train_rl_qaoa(cfg, hp, topt, seed), {}, {}, 0.0};
  out.best_sequence.resize(out.train.best_greedy_actions.size());
  for (std::size_t j = 0; j < out.best_sequence.size(); ++j)
    out.best_sequence[j] = out.train.best_greedy_actions[j].discrete;
  SequenceSolve fin = solve_sequence_durations_noisy(
      env, out.best_sequence, opt.eval_restarts, seed, inner);
  out.best_durations = fin.durations;
  out.best_clean_ratio = fin.clean_ratio;
  return out;
}

GridOracleResult grid_oracle(const EnvConfig& cfg,
                             const std::vector<int>& sequence,
                             int grid_points) {
  if (grid_points < 1) throw std::invalid_argument("grid_points must be >= 1");
  Environment env(cfg);
  const int q = int(sequence.size());
  if (q != cfg.q) throw std::invalid_argument("sequence length != q");
  double budget = std::pow(double(grid_points), double(q));
  if (budget > 1e7) throw std::invalid_argument("grid budget exceeded");

  std::vector<double> points(static_cast<std::size_t>(grid_points));
  if (grid_points == 1) {
    points[0] = 0.5;
  } else {
    for (int i = 0; i < grid_points; ++i)
      points[size_t(i)] =
          std::max(kRawFloor, double(i) / double(grid_points - 1));
  }

  GridOracleResult best;
  best.clean_ratio = -std::numeric_limits<double>::infinity();
  std::vector<int> odo(size_t(q), 0);
  Eigen::VectorXd raw(q);
  while (true) {
    for (int j = 0; j < q; ++j) raw(j) = points[size_t(odo[size_t(j)])];
    double ratio =
        env.evaluate(make_actions(sequence, raw)).clean_energy_ratio;
    ++best.evals;
    if (ratio > best.clean_ratio) {
      best.clean_ratio = ratio;
      best.raw.assign(raw.data(), raw.data() + q);
    }
    int j = 0;
    while (j < q && ++odo[size_t(j)] == grid_points) {
      odo[size_t(j)] = 0;
      ++j;
    }
    if (j == q) break;
  }
  return best;
}

}  // namespace rlqaoa
