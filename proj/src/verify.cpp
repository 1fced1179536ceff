#include "rlqaoa/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>

#include "rlqaoa/baselines.hpp"
#include "rlqaoa/distributions.hpp"
#include "rlqaoa/env.hpp"
#include "rlqaoa/policy.hpp"
#include "rlqaoa/ppo.hpp"
#include "rlqaoa/quantum.hpp"
#include "rlqaoa/rng.hpp"

namespace rlqaoa {
namespace {

std::string bound_detail(const char* label, double worst, double bound) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s %.3e (bound %.1e)", label, worst, bound);
  return buf;
}

QuantumState random_state(int dim, int n_sites, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  QuantumState psi;
  psi.n_sites = n_sites;
  psi.amplitudes = CVector(dim);
  for (int i = 0; i < dim; ++i)
    psi.amplitudes(i) = Complex(gauss(rng), gauss(rng));
  psi.amplitudes /= psi.amplitudes.norm();
  return psi;
}

CheckResult check_unitarity(std::uint64_t seed) {
  CheckResult res{"quantum-core", "unitarity", false, "", 0.0};
  auto rng = make_engine(seed, Stream::misc, 1);
  std::uniform_real_distribution<double> dur(0.0, 2.0);
  double worst = 0.0;
  for (int n = 3; n <= 5; ++n) {
    GeneratorSet gens =
        make_action_set(IsingParams{n, 1.0, 0.4523, 0.4045},
                        {"H1", "H2", "Y", "X|Y", "Y|Z"});
    for (int rep = 0; rep < 200; ++rep) {
      QuantumState psi = random_state(1 << n, n, rng);
      int g = std::uniform_int_distribution<int>(0, gens.size() - 1)(rng);
      psi = evolve(psi, gens.generators[g], dur(rng));
      worst = std::max(worst, psi.norm_error());
    }
  }
  res.pass = worst < 1e-10;
  res.detail = bound_detail("max norm drift", worst, 1e-10);
  return res;
}

CheckResult check_composition(std::uint64_t seed) {
  CheckResult res{"quantum-core", "composition", false, "", 0.0};
  auto rng = make_engine(seed, Stream::misc, 2);
  std::uniform_real_distribution<double> dur(0.0, 2.0);
  GeneratorSet gens = make_action_set(IsingParams{4, 1.0, 0.4523, 0.4045},
                                      {"H1", "H2", "Y", "X|Y", "Y|Z"});
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    QuantumState psi = random_state(16, 4, rng);
    int g = std::uniform_int_distribution<int>(0, gens.size() - 1)(rng);
    double t1 = dur(rng), t2 = dur(rng);
    QuantumState split = evolve(evolve(psi, gens.generators[g], t1),
                                gens.generators[g], t2);
    QuantumState whole = evolve(psi, gens.generators[g], t1 + t2);
    worst = std::max(worst,
                     (split.amplitudes - whole.amplitudes).cwiseAbs().maxCoeff());
  }
  res.pass = worst < 1e-9;
  res.detail = bound_detail("max amplitude diff", worst, 1e-9);
  return res;
}

CheckResult check_energy_conservation(std::uint64_t seed) {
  CheckResult res{"quantum-core", "energy-conservation", false, "", 0.0};
  auto rng = make_engine(seed, Stream::misc, 3);
  std::uniform_real_distribution<double> dur(0.0, 3.0);
  IsingOperators ops = build_ising(IsingParams{4, 1.0, 0.4523, 0.4045});
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    QuantumState psi = random_state(16, 4, rng);
    double before = energy_density(psi, ops.h, 4);
    double after = energy_density(evolve(psi, ops.h, dur(rng)), ops.h, 4);
    worst = std::max(worst, std::abs(after - before));
  }
  res.pass = worst < 1e-10;
  res.detail = bound_detail("max energy drift", worst, 1e-10);
  return res;
}

CheckResult check_eigenstate_variance(std::uint64_t seed) {
  CheckResult res{"quantum-core", "eigenstate-variance", false, "", 0.0};
  auto rng = make_engine(seed, Stream::misc, 4);
  IsingOperators ops = build_ising(IsingParams{4, 1.0, 0.4523, 0.4045});
  const CMatrix& vecs = ops.h.eigenvectors();
  double worst = 0.0;
  for (int rep = 0; rep < 32; ++rep) {
    int k = std::uniform_int_distribution<int>(0, ops.h.dim() - 1)(rng);
    QuantumState psi;
    psi.n_sites = 4;
    psi.amplitudes = vecs.col(k);
    psi = evolve(psi, ops.h, 1.3);
    worst = std::max(worst, energy_variance_density(psi, ops.h, 4));
  }
  res.pass = worst < 1e-8;
  res.detail = bound_detail("max eigenstate variance", worst, 1e-8);
  return res;
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int intervals) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i)
    s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
  return s * h / 3.0;
}

CheckResult check_normalization(std::uint64_t seed) {
  CheckResult res{"distributions", "normalization", false, "", 0.0};
  auto rng = make_engine(seed, Stream::misc, 5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 12; ++rep) {
    // The x integral is pushed through x = sigmoid(u) so the integrand is a
    // smooth bump; the density's own Jacobian term is still exercised.
    SigmoidGaussianParams sg{-2.0 + 4.0 * unif(rng), 0.3 + 1.7 * unif(rng)};
    double isg = simpson(
        [&](double u) {
          double x = sigmoid(u);
          return std::exp(sg_log_prob(x, sg)) * x * (1.0 - x);
        },
        -30.0, 30.0, 20000);
    worst = std::max(worst, std::abs(isg - 1.0));
    // Concentrations >= 2.5 keep the density twice differentiable at the
    // endpoints, which plain Simpson needs; the unit suite covers the
    // singular corner of the parameter space with dedicated quadrature.
    BetaParams be{2.5 + 2.5 * unif(rng), 2.5 + 2.5 * unif(rng)};
    double ibe = simpson(
        [&](double x) { return std::exp(beta_log_prob(x, be)); }, 1e-9,
        1.0 - 1e-9, 40000);
    worst = std::max(worst, std::abs(ibe - 1.0));
  }
  double worst_ent = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd z(5);
    for (int i = 0; i < 5; ++i) z(i) = -3.0 + 6.0 * unif(rng);
    double lse = std::log(z.array().exp().sum());
    z.array() -= lse;
    CategoricalParams cat{z};
    double linear = 0.0;
    for (int i = 0; i < 5; ++i) linear -= std::exp(z(i)) * z(i);
    worst_ent = std::max(worst_ent,
                         std::abs(categorical_entropy(cat) - linear));
  }
  res.pass = worst < 1e-6 && worst_ent < 1e-10;
  res.detail = bound_detail("max |integral-1|", worst, 1e-6) + ", " +
               bound_detail("entropy diff", worst_ent, 1e-10);
  return res;
}

CheckResult check_density_gradients(std::uint64_t seed) {
  CheckResult res{"distributions", "gradients", false, "", 0.0};
  auto rng = make_engine(seed, Stream::misc, 6);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double h = 1e-6;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    double x = 0.02 + 0.96 * unif(rng);
    {
      SigmoidGaussianParams p{-3.0 + 6.0 * unif(rng), 0.1 + 2.9 * unif(rng)};
      GradPair an = sg_grad_log_prob(x, p);
      double fdk = (sg_log_prob(x, {p.kappa + h, p.xi}) -
                    sg_log_prob(x, {p.kappa - h, p.xi})) /
                   (2 * h);
      double fdx = (sg_log_prob(x, {p.kappa, p.xi + h}) -
                    sg_log_prob(x, {p.kappa, p.xi - h})) /
                   (2 * h);
      worst = std::max({worst,
                        std::abs(an.first - fdk) /
                            std::max(1.0, std::abs(fdk)),
                        std::abs(an.second - fdx) /
                            std::max(1.0, std::abs(fdx))});
    }
    {
      BetaParams p{0.2 + 4.8 * unif(rng), 0.2 + 2.8 * unif(rng)};
      GradPair an = beta_grad_log_prob(x, p);
      double fdk = (beta_log_prob(x, {p.kappa + h, p.xi}) -
                    beta_log_prob(x, {p.kappa - h, p.xi})) /
                   (2 * h);
      double fdx = (beta_log_prob(x, {p.kappa, p.xi + h}) -
                    beta_log_prob(x, {p.kappa, p.xi - h})) /
                   (2 * h);
      worst = std::max({worst,
                        std::abs(an.first - fdk) /
                            std::max(1.0, std::abs(fdk)),
                        std::abs(an.second - fdx) /
                            std::max(1.0, std::abs(fdx))});
    }
  }
  res.pass = worst < 1e-5;
  res.detail = bound_detail("max rel grad err", worst, 1e-5);
  return res;
}

CheckResult check_causality(std::uint64_t seed, bool inject_fault) {
  CheckResult res{"policy-net", "causality", false, "", 0.0};
  PolicyDims dims{4, 3, 16, 2, ContinuousFamily::sigmoid_gaussian};
  AutoregressivePolicy pol(dims, seed);
  auto rng = make_engine(seed, Stream::misc, 7);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  for (auto& m : pol.params().mats)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = unif(rng);
  pol.enforce_masks();
  if (inject_fault) {
    // A forbidden first-layer weight: step 0 reading the last input block.
    pol.params().mats[0](0, (dims.q - 1) * dims.n_actions) = 0.7;
  }
  const int in_dim = dims.q * dims.n_actions;
  const int cols = 5;
  double worst = 0.0;
  for (int rep = 0; rep < 8; ++rep) {
    Eigen::MatrixXd x(in_dim, cols);
    for (int c = 0; c < cols; ++c)
      for (int i = 0; i < in_dim; ++i) x(i, c) = unif(rng);
    for (int j = 0; j < dims.q; ++j) {
      // Per-step forward slices past blocks only; the dense batched pass
      // relies on the masks zeroing every future-input weight.  Both must
      // ignore inputs at blocks >= j bit-for-bit.
      StepHeads a = pol.forward(x.col(0), j);
      Eigen::MatrixXd y = x;
      for (int c = 0; c < cols; ++c)
        for (int i = j * dims.n_actions; i < in_dim; ++i) y(i, c) = unif(rng);
      StepHeads b = pol.forward(y.col(0), j);
      worst = std::max({worst,
                        (a.log_probs - b.log_probs).cwiseAbs().maxCoeff(),
                        (a.kappa_raw - b.kappa_raw).cwiseAbs().maxCoeff(),
                        (a.xi - b.xi).cwiseAbs().maxCoeff()});
      BatchActivations ax = pol.forward_batch(x);
      BatchActivations ay = pol.forward_batch(y);
      const int ra = j * dims.n_actions;
      worst = std::max(
          {worst,
           (ax.head_p.middleRows(ra, dims.n_actions) -
            ay.head_p.middleRows(ra, dims.n_actions)).cwiseAbs().maxCoeff(),
           (ax.head_k.middleRows(ra, dims.n_actions) -
            ay.head_k.middleRows(ra, dims.n_actions)).cwiseAbs().maxCoeff(),
           (ax.head_x.middleRows(ra, dims.n_actions) -
            ay.head_x.middleRows(ra, dims.n_actions)).cwiseAbs().maxCoeff()});
    }
  }
  // The weight masks are a parameter invariant in their own right: init and
  // every update keep the future-input blocks exactly zero, and checkpoints
  // round-trip them.  Sliced forward passes never read those blocks, so a
  // corrupted mask is only observable here; any dense-GEMM consumer of the
  // stacked matrices depends on the zeros directly.
  const int a_n = dims.n_actions, dh = dims.d_h, l = dims.n_hidden;
  const auto& mats = pol.params().mats;
  double mask_resid = 0.0;
  for (int j = 0; j < dims.q; ++j) {
    mask_resid = std::max(
        mask_resid, mats[0]
                        .block(j * dh, j * a_n, dh, (dims.q - j) * a_n)
                        .cwiseAbs()
                        .maxCoeff());
    if (j + 1 < dims.q) {
      for (int i = 1; i < l; ++i)
        mask_resid = std::max(
            mask_resid,
            mats[i]
                .block(j * dh, (j + 1) * dh, dh, (dims.q - j - 1) * dh)
                .cwiseAbs()
                .maxCoeff());
      for (int h = 0; h < 3; ++h)
        mask_resid = std::max(
            mask_resid,
            mats[l + h]
                .block(j * a_n, (j + 1) * dh, a_n, (dims.q - j - 1) * dh)
                .cwiseAbs()
                .maxCoeff());
    }
  }
  res.pass = worst == 0.0 && mask_resid == 0.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "max future-input leak %.3e, max masked weight %.3e", worst,
                mask_resid);
  res.detail = buf;
  return res;
}

CheckResult check_ppo_gradient(std::uint64_t seed) {
  CheckResult res{"policy-net", "ppo-gradient", false, "", 0.0};
  PolicyDims dims{2, 3, 6, 1, ContinuousFamily::sigmoid_gaussian};
  AutoregressivePolicy pol(dims, seed);
  auto rng = make_engine(seed, Stream::misc, 8);
  std::uniform_real_distribution<double> unif(-0.4, 0.4);
  for (auto& m : pol.params().mats)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = unif(rng);
  for (auto& v : pol.params().vecs)
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = unif(rng);
  pol.enforce_masks();

  std::vector<std::mt19937_64> rngs;
  for (int k = 0; k < 6; ++k) rngs.push_back(make_engine(seed, Stream::action, 0, k));
  BatchActivations acts;
  auto batch = pol.sample_batch(rngs, &acts);
  Eigen::VectorXd lpd_old, lpc_old;
  pol.batch_log_probs(acts, batch, lpd_old, lpc_old);
  Eigen::VectorXd adv(6);
  adv << 1.3, -0.7, 0.4, -1.1, 0.9, -0.2;
  const double eps_d = 0.05, eps_c = 0.1, temp = 0.05;

  auto value = [&]() {
    BatchActivations a2 = pol.forward_batch(acts.x);
    return hybrid_objective(pol, a2, batch, lpd_old, lpc_old, adv, eps_d,
                            eps_c, temp)
        .value;
  };
  HybridObjective obj = hybrid_objective(pol, acts, batch, lpd_old, lpc_old,
                                         adv, eps_d, eps_c, temp);
  const double h = 1e-6;
  double worst = 0.0;
  int checked = 0;
  for (std::size_t t = 0; t < pol.params().mats.size(); ++t) {
    auto& m = pol.params().mats[t];
    for (int rep = 0; rep < 5; ++rep) {
      int r = std::uniform_int_distribution<int>(0, int(m.rows()) - 1)(rng);
      int c = std::uniform_int_distribution<int>(0, int(m.cols()) - 1)(rng);
      double saved = m(r, c);
      m(r, c) = saved + h;
      double fp = value();
      m(r, c) = saved - h;
      double fm = value();
      m(r, c) = saved;
      double fd = (fp - fm) / (2 * h);
      double an = obj.grads.mats[t](r, c);
      worst = std::max(worst, std::abs(an - fd) /
                                  std::max({1.0, std::abs(an), std::abs(fd)}));
      ++checked;
    }
  }
  for (std::size_t t = 0; t < pol.params().vecs.size(); ++t) {
    auto& v = pol.params().vecs[t];
    for (int rep = 0; rep < 3; ++rep) {
      int i = std::uniform_int_distribution<int>(0, int(v.size()) - 1)(rng);
      double saved = v(i);
      v(i) = saved + h;
      double fp = value();
      v(i) = saved - h;
      double fm = value();
      v(i) = saved;
      double fd = (fp - fm) / (2 * h);
      double an = obj.grads.vecs[t](i);
      worst = std::max(worst, std::abs(an - fd) /
                                  std::max({1.0, std::abs(an), std::abs(fd)}));
      ++checked;
    }
  }
  res.pass = worst < 1e-4 && checked >= 20;
  res.detail = bound_detail("max rel grad err", worst, 1e-4);
  return res;
}

CheckResult check_powell_quadratic(std::uint64_t seed) {
  CheckResult res{"baselines", "powell-quadratic", false, "", 0.0};
  auto rng = make_engine(seed, Stream::misc, 9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 5;
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
  Eigen::MatrixXd qmat = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd evs(n);
  for (int i = 0; i < n; ++i) evs(i) = 0.5 + 0.5 * i;
  Eigen::MatrixXd a = qmat * evs.asDiagonal() * qmat.transpose();
  Eigen::VectorXd xstar = Eigen::VectorXd::Constant(n, 0.45);
  auto f = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd d = x - xstar;
    return d.dot(a * d);
  };
  PowellResult pr = powell_minimize(f, Eigen::VectorXd::Constant(n, 0.9));
  double err = (pr.x - xstar).cwiseAbs().maxCoeff();
  res.pass = pr.converged && err <= 1e-5 && pr.sweeps <= 2 * n + 10;
  res.detail = bound_detail("minimizer err", err, 1e-5) + ", " +
               std::to_string(pr.sweeps) + " sweeps";
  return res;
}

CheckResult check_powell_rosenbrock() {
  CheckResult res{"baselines", "powell-rosenbrock", false, "", 0.0};
  auto f = [](const Eigen::VectorXd& x) {
    double a = 2.0 * x(0) - 0.5, b = 2.0 * x(1) - 0.5;
    return 100.0 * (b - a * a) * (b - a * a) + (1.0 - a) * (1.0 - a);
  };
  Eigen::VectorXd x0(2);
  x0 << 0.1, 0.9;
  PowellResult pr = powell_minimize(f, x0);
  double err = std::max(std::abs(pr.x(0) - 0.75), std::abs(pr.x(1) - 0.75));
  res.pass = err <= 1e-4;
  res.detail = bound_detail("minimizer err", err, 1e-4);
  return res;
}

void enumerate_sequences(int n_actions, int length, std::vector<int>& prefix,
                         std::vector<std::vector<int>>& out) {
  if (static_cast<int>(prefix.size()) == length) {
    out.push_back(prefix);
    return;
  }
  for (int a = 0; a < n_actions; ++a) {
    if (!prefix.empty() && prefix.back() == a) continue;
    prefix.push_back(a);
    enumerate_sequences(n_actions, length, prefix, out);
    prefix.pop_back();
  }
}

CheckResult check_enumeration_oracle(std::uint64_t seed) {
  CheckResult res{"baselines", "enumeration-oracle", false, "", 0.0};
  EnvConfig cfg;
  cfg.ising.n_sites = 3;
  cfg.total_T = 5.0;
  cfg.q = 2;
  cfg.action_labels = {"H1", "H2", "Y"};
  Environment env(cfg);
  std::vector<std::vector<int>> seqs;
  std::vector<int> prefix;
  enumerate_sequences(3, 2, prefix, seqs);
  double worst_gap = -1e300;
  bool ok = !seqs.empty();
  for (const auto& seq : seqs) {
    SequenceSolve solved = solve_sequence_durations(env, seq, 4, seed);
    GridOracleResult grid = grid_oracle(cfg, seq, 21);
    double gap = grid.clean_ratio - solved.clean_ratio;  // >1e-3 means miss
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-3) ok = false;
  }
  res.pass = ok;
  res.detail = bound_detail("max grid-solve gap", worst_gap, 1e-3);
  return res;
}

CheckResult check_log_determinism(std::uint64_t seed) {
  CheckResult res{"rl-env", "log-determinism", false, "", 0.0};
  EnvConfig cfg;
  cfg.ising.n_sites = 2;
  cfg.total_T = 3.0;
  cfg.q = 3;
  cfg.action_labels = {"H1", "H2", "Y"};
  cfg.noise.kind = NoiseKind::classical_gaussian;
  cfg.noise.strength = 0.2;
  PPOHyperparams hp;
  hp.batch_size = 8;
  hp.total_iters = 4;
  TrainOptions opt;
  opt.d_h = 8;
  opt.n_hidden = 1;
  auto log_text = [&]() {
    TrainResult tr = train_rl_qaoa(cfg, hp, opt, seed);
    std::ostringstream os;
    write_training_log(os, tr.history, "rl-qaoa");
    return os.str();
  };
  std::string first = log_text();
  std::string second = log_text();
  res.pass = !first.empty() && first == second;
  res.detail = res.pass ? "reruns byte-identical" : "rerun logs differ";
  return res;
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  auto timed = [&out](CheckResult r,
                      const std::chrono::steady_clock::time_point& t0) {
    auto t1 = std::chrono::steady_clock::now();
    r.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.push_back(std::move(r));
  };
  auto run = [&](auto&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    timed(fn(), t0);
  };
  run([&] { return check_unitarity(opt.seed); });
  run([&] { return check_composition(opt.seed); });
  run([&] { return check_energy_conservation(opt.seed); });
  run([&] { return check_eigenstate_variance(opt.seed); });
  run([&] { return check_normalization(opt.seed); });
  run([&] { return check_density_gradients(opt.seed); });
  run([&] { return check_causality(opt.seed, opt.inject_mask_fault); });
  run([&] { return check_ppo_gradient(opt.seed); });
  run([&] { return check_powell_quadratic(opt.seed); });
  run([&] { return check_powell_rosenbrock(); });
  run([&] { return check_enumeration_oracle(opt.seed); });
  run([&] { return check_log_determinism(opt.seed); });
  return out;
}

bool print_verification(std::ostream& out,
                        const std::vector<CheckResult>& results) {
  bool all = true;
  size_t wm = 6, wn = 5;
  for (const CheckResult& r : results) {
    wm = std::max(wm, r.module.size());
    wn = std::max(wn, r.name.size());
  }
  for (const CheckResult& r : results) {
    all = all && r.pass;
    char line[512];
    std::snprintf(line, sizeof line, "%-*s  %-*s  %s  %8.1f ms  %s\n",
                  static_cast<int>(wm), r.module.c_str(),
                  static_cast<int>(wn), r.name.c_str(),
                  r.pass ? "PASS" : "FAIL", r.wall_ms, r.detail.c_str());
    out << line;
  }
  out << (all ? "all checks passed\n" : "VERIFICATION FAILED\n");
  return all;
}

}  // namespace rlqaoa
