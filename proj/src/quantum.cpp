#include "rlqaoa/quantum.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rlqaoa {

namespace {

void check_sites(int n_sites) {
  if (n_sites < 1 || n_sites > kMaxSites)
    throw std::invalid_argument("n_sites must be in [1, " +
                                std::to_string(kMaxSites) + "]");
}

int bit(int basis, int site) { return (basis >> site) & 1; }

// Spin-1/2 operators act on a basis state as: optionally flip the site bit
// and multiply by a coefficient that depends on the incoming bit value.
struct SiteAction {
  bool flips;
  Complex coeff_up;    // incoming bit 0 (spin up)
  Complex coeff_down;  // incoming bit 1 (spin down)
};

const SiteAction kSx{true, {0.5, 0.0}, {0.5, 0.0}};
const SiteAction kSy{true, {0.0, 0.5}, {0.0, -0.5}};
const SiteAction kSz{false, {0.5, 0.0}, {-0.5, 0.0}};

void add_one_site(CMatrix& m, int n_sites, const SiteAction& a, int site,
                  Complex scale) {
  const int dim = 1 << n_sites;
  for (int b = 0; b < dim; ++b) {
    Complex c = bit(b, site) ? a.coeff_down : a.coeff_up;
    int target = a.flips ? (b ^ (1 << site)) : b;
    m(target, b) += scale * c;
  }
}

void add_two_site(CMatrix& m, int n_sites, const SiteAction& a, int site_a,
                  const SiteAction& b, int site_b, Complex scale) {
  const int dim = 1 << n_sites;
  for (int s = 0; s < dim; ++s) {
    Complex c = (bit(s, site_a) ? a.coeff_down : a.coeff_up) *
                (bit(s, site_b) ? b.coeff_down : b.coeff_up);
    int target = s;
    if (a.flips) target ^= 1 << site_a;
    if (b.flips) target ^= 1 << site_b;
    m(target, s) += scale * c;
  }
}

CMatrix zero_matrix(int n_sites) {
  const int dim = 1 << n_sites;
  return CMatrix::Zero(dim, dim);
}

}  // namespace

QuantumState QuantumState::all_up(int n_sites) {
  check_sites(n_sites);
  QuantumState psi;
  psi.n_sites = n_sites;
  psi.amplitudes = CVector::Zero(1 << n_sites);
  psi.amplitudes(0) = 1.0;
  return psi;
}

HermitianOperator::HermitianOperator(CMatrix m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols())
    throw std::invalid_argument("operator matrix must be square");
  if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("operator matrix is not Hermitian");
}

void HermitianOperator::ensure_eig() const {
  if (eig_ready_) return;
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(mat_);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  evals_ = solver.eigenvalues();
  evecs_ = solver.eigenvectors();
  eig_ready_ = true;
}

const RVector& HermitianOperator::eigenvalues() const {
  ensure_eig();
  return evals_;
}

const CMatrix& HermitianOperator::eigenvectors() const {
  ensure_eig();
  return evecs_;
}

void HermitianOperator::warm_cache() const { ensure_eig(); }

IsingOperators build_ising(const IsingParams& p) {
  check_sites(p.n_sites);
  if (p.n_sites < 2)
    throw std::invalid_argument("n_sites must be >= 2 for a periodic chain");
  CMatrix h1 = zero_matrix(p.n_sites);
  CMatrix h2 = zero_matrix(p.n_sites);
  for (int i = 0; i < p.n_sites; ++i) {
    int j = (i + 1) % p.n_sites;
    add_two_site(h1, p.n_sites, kSz, j, kSz, i, p.coupling);
    add_one_site(h1, p.n_sites, kSz, i, p.h_z);
    add_one_site(h2, p.n_sites, kSx, i, p.h_x);
  }
  IsingOperators ops;
  ops.h1 = HermitianOperator(h1);
  ops.h2 = HermitianOperator(h2);
  ops.h = HermitianOperator(h1 + h2);
  return ops;
}

GeneratorSet build_gauge_terms(int n_sites) {
  check_sites(n_sites);
  if (n_sites < 2)
    throw std::invalid_argument("n_sites must be >= 2 for a periodic chain");
  CMatrix y = zero_matrix(n_sites);
  CMatrix xy = zero_matrix(n_sites);
  CMatrix yz = zero_matrix(n_sites);
  for (int i = 0; i < n_sites; ++i) {
    int j = (i + 1) % n_sites;
    add_one_site(y, n_sites, kSy, i, 1.0);
    add_two_site(xy, n_sites, kSx, i, kSy, j, 1.0);
    add_two_site(xy, n_sites, kSy, i, kSx, j, 1.0);
    add_two_site(yz, n_sites, kSy, i, kSz, j, 1.0);
    add_two_site(yz, n_sites, kSz, i, kSy, j, 1.0);
  }
  GeneratorSet out;
  out.generators.emplace_back(y);
  out.generators.emplace_back(xy);
  out.generators.emplace_back(yz);
  out.labels = {"Y", "X|Y", "Y|Z"};
  return out;
}

int GeneratorSet::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i)
    if (labels[i] == label) return i;
  return -1;
}

GeneratorSet make_action_set(const IsingParams& p,
                             const std::vector<std::string>& labels) {
  if (labels.empty()) throw std::invalid_argument("action set must be non-empty");
  IsingOperators ising = build_ising(p);
  GeneratorSet gauge = build_gauge_terms(p.n_sites);
  GeneratorSet out;
  for (const auto& label : labels) {
    if (label == "H1") {
      out.generators.push_back(ising.h1);
    } else if (label == "H2") {
      out.generators.push_back(ising.h2);
    } else {
      int idx = gauge.index_of(label);
      if (idx < 0) throw std::invalid_argument("unknown generator label: " + label);
      out.generators.push_back(gauge.generators[idx]);
    }
    out.labels.push_back(label);
  }
  return out;
}

CMatrix spin_x(int n_sites, int site) {
  check_sites(n_sites);
  CMatrix m = zero_matrix(n_sites);
  add_one_site(m, n_sites, kSx, site, 1.0);
  return m;
}

CMatrix spin_y(int n_sites, int site) {
  check_sites(n_sites);
  CMatrix m = zero_matrix(n_sites);
  add_one_site(m, n_sites, kSy, site, 1.0);
  return m;
}

CMatrix spin_z(int n_sites, int site) {
  check_sites(n_sites);
  CMatrix m = zero_matrix(n_sites);
  add_one_site(m, n_sites, kSz, site, 1.0);
  return m;
}

QuantumState evolve(const QuantumState& psi, const HermitianOperator& h,
                    double duration) {
  if (psi.dim() != h.dim())
    throw std::invalid_argument("state and operator dimensions differ");
  const RVector& lambda = h.eigenvalues();
  const CMatrix& v = h.eigenvectors();
  CVector coeffs = v.adjoint() * psi.amplitudes;
  for (int k = 0; k < coeffs.size(); ++k)
    coeffs(k) *= std::exp(Complex(0.0, -duration * lambda(k)));
  QuantumState out;
  out.n_sites = psi.n_sites;
  out.amplitudes = v * coeffs;
  return out;
}

QuantumState apply_protocol(const QuantumState& psi, const Protocol& protocol,
                            const GeneratorSet& gens) {
  QuantumState state = psi;
  for (const auto& step : protocol.steps) {
    if (step.generator < 0 || step.generator >= gens.size())
      throw std::invalid_argument("protocol step references unknown generator");
    state = evolve(state, gens.generators[step.generator], step.duration);
  }
  return state;
}

double energy_density(const QuantumState& psi, const HermitianOperator& h,
                      int n_sites) {
  if (psi.dim() != h.dim())
    throw std::invalid_argument("state and operator dimensions differ");
  Complex e = psi.amplitudes.dot(h.matrix() * psi.amplitudes);
  return e.real() / n_sites;
}

double energy_variance_density(const QuantumState& psi,
                               const HermitianOperator& h, int n_sites) {
  if (psi.dim() != h.dim())
    throw std::invalid_argument("state and operator dimensions differ");
  CVector hpsi = h.matrix() * psi.amplitudes;
  double e = psi.amplitudes.dot(hpsi).real();
  // Residual form of <H^2> - <H>^2: no cancellation, so an eigenstate
  // measures at rounding scale (~1e-15) instead of ~sqrt(eps)*|E|.
  double radicand = (hpsi - e * psi.amplitudes).squaredNorm();
  return std::sqrt(radicand) / n_sites;
}

GroundState ground_state(const HermitianOperator& h, int n_sites) {
  GroundState gs;
  gs.energy = h.eigenvalues()(0);
  gs.state.n_sites = n_sites;
  gs.state.amplitudes = h.eigenvectors().col(0);
  int imax = 0;
  double amax = 0.0;
  for (int i = 0; i < gs.state.dim(); ++i) {
    double a = std::abs(gs.state.amplitudes(i));
    if (a > amax) {
      amax = a;
      imax = i;
    }
  }
  Complex phase = gs.state.amplitudes(imax) / amax;
  gs.state.amplitudes /= phase;
  return gs;
}

double fidelity(const QuantumState& a, const QuantumState& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("state dimensions differ");
  return std::norm(a.amplitudes.dot(b.amplitudes));
}

double adiabatic_schedule(double t, double T) {
  double s = std::sin(std::numbers::pi * t / (2.0 * T));
  return s * s;
}

QuantumState adiabatic_evolve(const IsingParams& p, double T, double dt) {
  if (T <= 0.0) throw std::invalid_argument("T must be positive");
  if (dt <= 0.0 || dt >= T) throw std::invalid_argument("dt must be in (0, T)");
  IsingOperators ising = build_ising(p);
  const CMatrix& h = ising.h.matrix();
  CMatrix htilde = zero_matrix(p.n_sites);
  for (int i = 0; i < p.n_sites; ++i)
    add_one_site(htilde, p.n_sites, kSz, i, -1.0);

  QuantumState psi = QuantumState::all_up(p.n_sites);
  const int n_steps = static_cast<int>(std::ceil(T / dt));
  Eigen::SelfAdjointEigenSolver<CMatrix> solver;
  double t = 0.0;
  for (int s = 0; s < n_steps; ++s) {
    double step = std::min(dt, T - t);
    double lambda = adiabatic_schedule(t + 0.5 * step, T);
    solver.compute(lambda * h + (1.0 - lambda) * htilde);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("eigendecomposition failed");
    CVector coeffs = solver.eigenvectors().adjoint() * psi.amplitudes;
    for (int k = 0; k < coeffs.size(); ++k)
      coeffs(k) *= std::exp(Complex(0.0, -step * solver.eigenvalues()(k)));
    psi.amplitudes = solver.eigenvectors() * coeffs;
    t += step;
  }
  return psi;
}

}  // namespace rlqaoa
