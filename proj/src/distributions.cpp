#include "rlqaoa/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rlqaoa {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2

void check_unit_interval(double x) {
  if (!(x > 0.0 && x < 1.0))
    throw std::domain_error("x must lie strictly inside (0,1)");
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) throw std::domain_error(std::string(name) + " must be positive");
}

// Marsaglia-Tsang squeeze method for Gamma(alpha, 1), alpha >= 1.
double gamma_at_least_one(double alpha, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z = gauss(rng);
    double t = 1.0 + c * z;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = unif(rng);
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double gamma_sample(double alpha, std::mt19937_64& rng) {
  if (alpha >= 1.0) return gamma_at_least_one(alpha, rng);
  // Boost for alpha < 1: Gamma(a) = Gamma(a+1) * U^(1/a).
  std::uniform_real_distribution<double> unif;
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return gamma_at_least_one(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
}

}  // namespace

double clamp_unit(double x) {
  if (x < kUnitClamp) return kUnitClamp;
  if (x > 1.0 - kUnitClamp) return 1.0 - kUnitClamp;
  return x;
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  double e = std::exp(u);
  return e / (1.0 + e);
}

double logit(double x) {
  check_unit_interval(x);
  return std::log(x) - std::log1p(-x);
}

int categorical_sample(const CategoricalParams& p,
                       const std::vector<bool>& allowed, std::mt19937_64& rng) {
  const auto n = p.log_probs.size();
  if (static_cast<Eigen::Index>(allowed.size()) != n)
    throw std::invalid_argument("mask length mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (allowed[i]) total += std::exp(p.log_probs(i));
  if (total <= 0.0) throw std::domain_error("all categorical entries masked");

  std::uniform_real_distribution<double> unif;
  double u = unif(rng) * total;
  double acc = 0.0;
  int last_allowed = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!allowed[i]) continue;
    last_allowed = static_cast<int>(i);
    acc += std::exp(p.log_probs(i));
    if (u < acc) return last_allowed;
  }
  return last_allowed;  // rounding spill lands on the last unmasked entry
}

double categorical_entropy(const CategoricalParams& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.log_probs.size(); ++i) {
    double prob = std::exp(p.log_probs(i));
    if (prob > 0.0) s -= prob * p.log_probs(i);
  }
  return s;
}

double sg_log_prob(double x, const SigmoidGaussianParams& p) {
  check_positive(p.xi, "xi");
  check_unit_interval(x);
  double z = (logit(x) - p.kappa) / p.xi;
  return -std::log(p.xi) - kHalfLog2Pi - 0.5 * z * z -
         std::log(x * (1.0 - x));
}

GradPair sg_grad_log_prob(double x, const SigmoidGaussianParams& p) {
  check_positive(p.xi, "xi");
  check_unit_interval(x);
  double r = logit(x) - p.kappa;
  double dk = r / (p.xi * p.xi);
  double dxi = -1.0 / p.xi + r * r / (p.xi * p.xi * p.xi);
  return {dk, dxi};
}

double sg_sample(const SigmoidGaussianParams& p, std::mt19937_64& rng) {
  check_positive(p.xi, "xi");
  std::normal_distribution<double> gauss;
  return clamp_unit(sigmoid(p.kappa + p.xi * gauss(rng)));
}

double beta_log_prob(double x, const BetaParams& p) {
  check_positive(p.kappa, "kappa");
  check_positive(p.xi, "xi");
  check_unit_interval(x);
  return log_gamma(p.kappa + p.xi) - log_gamma(p.kappa) - log_gamma(p.xi) +
         (p.kappa - 1.0) * std::log(x) + (p.xi - 1.0) * std::log1p(-x);
}

GradPair beta_grad_log_prob(double x, const BetaParams& p) {
  check_positive(p.kappa, "kappa");
  check_positive(p.xi, "xi");
  check_unit_interval(x);
  double common = digamma(p.kappa + p.xi);
  return {common - digamma(p.kappa) + std::log(x),
          common - digamma(p.xi) + std::log1p(-x)};
}

double beta_sample(const BetaParams& p, std::mt19937_64& rng) {
  check_positive(p.kappa, "kappa");
  check_positive(p.xi, "xi");
  double a = gamma_sample(p.kappa, rng);
  double b = gamma_sample(p.xi, rng);
  return clamp_unit(a / (a + b));
}

double log_gamma(double x) {
  check_positive(x, "x");
  // Reflection below 0.5 keeps the Lanczos series in its accurate range.
  if (x < 0.5)
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           log_gamma(1.0 - x);
  // Lanczos coefficients, g = 7, n = 9.
  static constexpr double kG = 7.0;
  static constexpr double kCoeff[9] = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  double z = x - 1.0;
  double series = kCoeff[0];
  for (int i = 1; i < 9; ++i) series += kCoeff[i] / (z + i);
  double t = z + kG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(series);
}

double digamma(double x) {
  check_positive(x, "x");
  // Shift into the asymptotic regime, then apply the Bernoulli series.
  double value = 0.0;
  while (x < 10.0) {
    value -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  double series = std::log(x) - 0.5 * inv -
                  inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 -
                          inv2 * (1.0 / 240 - inv2 * (1.0 / 132 -
                          inv2 * 691.0 / 32760)))));
  return value + series;
}

}  // namespace rlqaoa
