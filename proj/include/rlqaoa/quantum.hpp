#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace rlqaoa {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

// Dense state vectors become impractical beyond this chain length.
inline constexpr int kMaxSites = 14;

// Basis convention: site i maps to bit i (site 0 = least significant bit),
// bit 0 means spin up (S^z eigenvalue +1/2).  |up...up> is basis index 0.
struct QuantumState {
  CVector amplitudes;
  int n_sites = 0;

  static QuantumState all_up(int n_sites);
  int dim() const { return static_cast<int>(amplitudes.size()); }
  double norm_error() const { return std::abs(amplitudes.norm() - 1.0); }
};

// Hermitian matrix with a lazily computed, cached eigendecomposition.
// The cache is an implementation detail: results never depend on whether
// it was warm or cold.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(CMatrix m);

  const CMatrix& matrix() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }

  const RVector& eigenvalues() const;
  const CMatrix& eigenvectors() const;
  void warm_cache() const;
  bool cache_warm() const { return eig_ready_; }

 private:
  void ensure_eig() const;

  CMatrix mat_;
  mutable RVector evals_;
  mutable CMatrix evecs_;
  mutable bool eig_ready_ = false;
};

struct IsingParams {
  int n_sites = 4;
  double coupling = 1.0;  // J
  double h_z = 0.4523;
  double h_x = 0.4045;
};

// H1 = sum_i (J S^z_{i+1} S^z_i + h_z S^z_i), H2 = h_x sum_i S^x_i,
// periodic boundary, h = h1 + h2.
struct IsingOperators {
  HermitianOperator h1, h2, h;
};

IsingOperators build_ising(const IsingParams& p);

// An ordered set of Hermitian generators the policy can pick from.
struct GeneratorSet {
  std::vector<HermitianOperator> generators;
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(generators.size()); }
  int dim() const { return generators.empty() ? 0 : generators[0].dim(); }
  int index_of(const std::string& label) const;
};

// Variational gauge-potential terms:
//   Y   = sum_i S^y_i
//   X|Y = sum_i (S^x_i S^y_{i+1} + S^y_i S^x_{i+1})
//   Y|Z = sum_i (S^y_i S^z_{i+1} + S^z_i S^y_{i+1})
GeneratorSet build_gauge_terms(int n_sites);

// Assembles the action set for a run from labels drawn from
// {"H1","H2","Y","X|Y","Y|Z"}, in the order given.
GeneratorSet make_action_set(const IsingParams& p,
                             const std::vector<std::string>& labels);

// Single-site spin operators (S^a = sigma^a / 2) as dense matrices.
CMatrix spin_x(int n_sites, int site);
CMatrix spin_y(int n_sites, int site);
CMatrix spin_z(int n_sites, int site);

struct ProtocolStep {
  int generator = 0;
  double duration = 0.0;
};

struct Protocol {
  std::vector<ProtocolStep> steps;
  double total_T = 0.0;
};

// psi -> exp(-i * duration * H) psi via the cached eigendecomposition.
QuantumState evolve(const QuantumState& psi, const HermitianOperator& h,
                    double duration);

QuantumState apply_protocol(const QuantumState& psi, const Protocol& protocol,
                            const GeneratorSet& gens);

// <psi|H|psi> / n_sites (real part; imaginary part is rounding noise).
double energy_density(const QuantumState& psi, const HermitianOperator& h,
                      int n_sites);

// sqrt(<H^2> - <H>^2) / n_sites, computed as ||(H - <H>)psi|| / n_sites
// so near-eigenstates are not lost to cancellation.
double energy_variance_density(const QuantumState& psi,
                               const HermitianOperator& h, int n_sites);

struct GroundState {
  double energy = 0.0;  // total energy, not density
  QuantumState state;
};

// Lowest eigenpair; the eigenvector phase is fixed so its largest-magnitude
// amplitude is real and positive.
GroundState ground_state(const HermitianOperator& h, int n_sites);

double fidelity(const QuantumState& a, const QuantumState& b);

// Smooth ramp lambda(t) = sin^2(pi t / (2 T)).
double adiabatic_schedule(double t, double T);

// Piecewise-constant midpoint integration of H(lambda) = lambda H + (1 - lambda) Htilde
// with Htilde = -sum_i S^z_i, starting from |up...up>.
QuantumState adiabatic_evolve(const IsingParams& p, double T, double dt = 1e-3);

}  // namespace rlqaoa
