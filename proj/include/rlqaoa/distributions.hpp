#pragma once

#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rlqaoa {

using GradPair = std::pair<double, double>;  // (d/dkappa, d/dxi)

// Continuous samples and durations are kept strictly inside (0,1) so that
// logit/log never see the endpoints; the perturbation is below 1e-6.
inline constexpr double kUnitClamp = 1e-6;

double clamp_unit(double x);
double sigmoid(double u);
double logit(double x);  // x in (0,1)

struct CategoricalParams {
  Eigen::VectorXd log_probs;  // normalized: logsumexp = 0
};

// Draws an index proportionally to exp(log_probs) over unmasked entries.
int categorical_sample(const CategoricalParams& p,
                       const std::vector<bool>& allowed, std::mt19937_64& rng);

// Exact entropy -sum_k exp(z_k) z_k of a normalized log-prob vector;
// entries with zero probability contribute zero.
double categorical_entropy(const CategoricalParams& p);

struct SigmoidGaussianParams {
  double kappa = 0.0;  // pre-sigmoid location
  double xi = 1.0;     // pre-sigmoid scale, > 0
};

struct BetaParams {
  double kappa = 1.0;  // > 0
  double xi = 1.0;     // > 0
};

double sg_log_prob(double x, const SigmoidGaussianParams& p);
GradPair sg_grad_log_prob(double x, const SigmoidGaussianParams& p);
double sg_sample(const SigmoidGaussianParams& p, std::mt19937_64& rng);

double beta_log_prob(double x, const BetaParams& p);
GradPair beta_grad_log_prob(double x, const BetaParams& p);
double beta_sample(const BetaParams& p, std::mt19937_64& rng);

// Lanczos approximation; x > 0.
double log_gamma(double x);
// Asymptotic series with upward recurrence; x > 0.
double digamma(double x);

}  // namespace rlqaoa
