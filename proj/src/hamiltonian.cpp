#include "qclimit/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qclimit/errors.hpp"

namespace qcl {

std::string to_string(Statistics s) { return s == Statistics::Bosonic ? "bosonic" : "fermionic"; }

Statistics statistics_from_name(const std::string& name) {
  if (name == "bosonic" || name == "boson" || name == "bosons") return Statistics::Bosonic;
  if (name == "fermionic" || name == "fermion" || name == "fermions") return Statistics::Fermionic;
  throw ValidationError("E_STATISTICS", "statistics", "unknown statistics '" + name + "'");
}

double hermitian_defect(const CMatrix& m) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m(i, j) - std::conj(m(j, i))));
  return worst;
}

namespace {

void require_hermitian(const CMatrix& m, const std::string& what) {
  if (m.rows() < 1 || m.rows() != m.cols())
    throw ValidationError("E_DIMENSION", what, "coefficient matrix must be square with L >= 1");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag()))
        throw ValidationError("E_NONFINITE", what, "coefficient matrix has non-finite entries");
  const double defect = hermitian_defect(m);
  if (defect > kHermitianTolerance) {
    std::ostringstream os;
    os << "matrix is not hermitian (max |h_ij - conj(h_ji)| = " << defect << ")";
    throw ValidationError("E_NONHERMITIAN", what, os.str());
  }
}

}  // namespace

HoppingMatrix::HoppingMatrix(CMatrix entries) : entries_(std::move(entries)) {
  require_hermitian(entries_, "h");
}

HoppingMatrix HoppingMatrix::linear_chain(std::span<const double> eps, cplx hopping) {
  const auto L = static_cast<Eigen::Index>(eps.size());
  CMatrix h = CMatrix::Zero(L, L);
  for (Eigen::Index i = 0; i < L; ++i) h(i, i) = eps[i];
  for (Eigen::Index i = 0; i + 1 < L; ++i) {
    h(i, i + 1) = hopping;
    h(i + 1, i) = std::conj(hopping);
  }
  return HoppingMatrix(std::move(h));
}

HoppingMatrix HoppingMatrix::cyclic(std::span<const double> eps, cplx hopping) {
  const auto L = static_cast<Eigen::Index>(eps.size());
  CMatrix h = linear_chain(eps, hopping).entries();
  if (L > 2) {
    h(0, L - 1) = hopping;
    h(L - 1, 0) = std::conj(hopping);
  }
  return HoppingMatrix(std::move(h));
}

SpectralData diagonalize(const HoppingMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.entries());
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");

  SpectralData out{solver.eigenvectors(), solver.eigenvalues()};
  for (Eigen::Index k = 0; k < out.unitary.cols(); ++k) {
    auto col = out.unitary.col(k);
    double biggest = 0.0;
    for (Eigen::Index i = 0; i < col.size(); ++i) biggest = std::max(biggest, std::abs(col(i)));
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 0; i < col.size(); ++i)
      if (std::abs(col(i)) >= biggest - 1e-12) {
        pivot = i;
        break;
      }
    const cplx phase = col(pivot) / std::abs(col(pivot));
    col *= std::conj(phase);
    col(pivot) = std::abs(col(pivot));
  }
  return out;
}

FieldState::FieldState(std::vector<cplx> amplitudes) : amps_(std::move(amplitudes)) {
  for (const auto& a : amps_)
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw ValidationError("E_NONFINITE", "state", "field amplitudes must be finite");
}

double FieldState::total_occupation() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

FieldState FieldState::with_global_phase(double phase) const {
  const cplx rot = std::polar(1.0, phase);
  std::vector<cplx> out(amps_);
  for (auto& a : out) a *= rot;
  return FieldState(std::move(out));
}

ClassicalObservable::ClassicalObservable(CMatrix coeffs, Statistics statistics,
                                         SaturationFunction saturation, std::string label)
    : coeffs_(std::move(coeffs)),
      statistics_(statistics),
      saturation_(std::move(saturation)),
      label_(std::move(label)) {
  require_hermitian(coeffs_, label_.empty() ? "observable" : label_);
}

ClassicalObservable ClassicalObservable::with_label(std::string label) const {
  ClassicalObservable copy(*this);
  copy.label_ = std::move(label);
  return copy;
}

ClassicalObservable hamiltonian_observable(const HoppingMatrix& h, Statistics statistics,
                                           const SaturationFunction& saturation) {
  return ClassicalObservable(h.entries(), statistics, saturation, "H");
}

std::vector<ClassicalObservable> candidate_constants(const SpectralData& spectrum,
                                                     Statistics statistics,
                                                     const SaturationFunction& saturation) {
  const auto& u = spectrum.unitary;
  std::vector<ClassicalObservable> out;
  out.reserve(static_cast<std::size_t>(u.cols()));
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    CMatrix c = u.col(k) * u.col(k).adjoint();
    // Remove the round-off antihermitian part so validation sees an exact hermitian matrix.
    c = 0.5 * (c + c.adjoint()).eval();
    out.emplace_back(std::move(c), statistics, saturation, "N_" + std::to_string(k + 1));
  }
  return out;
}

ClassicalObservable sum_observables(std::span<const ClassicalObservable> terms, std::string label) {
  if (terms.empty()) throw ValidationError("E_DIMENSION", label, "cannot sum zero observables");
  CMatrix total = terms.front().coeffs();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (terms[i].dim() != terms.front().dim() ||
        terms[i].statistics() != terms.front().statistics() ||
        terms[i].saturation().kind() != terms.front().saturation().kind())
      throw ValidationError("E_DIMENSION", label, "observables in a sum must share dimension and rules");
    total += terms[i].coeffs();
  }
  return ClassicalObservable(std::move(total), terms.front().statistics(),
                             terms.front().saturation(), std::move(label));
}

namespace {

void check_dim(const ClassicalObservable& obs, const FieldState& state) {
  if (static_cast<std::size_t>(obs.dim()) != state.size())
    throw ValidationError("E_DIMENSION", obs.label(), "state size does not match observable dimension");
}

// (1 - 2|psi_k|^2) over lo < k < hi, optionally skipping one index.
double string_factor(const std::vector<double>& occ, int lo, int hi, int skip = -1) {
  double s = 1.0;
  for (int k = lo + 1; k < hi; ++k)
    if (k != skip) s *= 1.0 - 2.0 * occ[k];
  return s;
}

struct FermionSite {
  std::vector<double> occ;
  std::vector<double> f;
};

FermionSite fermion_site_data(const ClassicalObservable& obs, const FieldState& state) {
  const int L = obs.dim();
  FermionSite d{std::vector<double>(L), std::vector<double>(L)};
  for (int i = 0; i < L; ++i) {
    d.occ[i] = state.occupation(i);
    d.f[i] = obs.saturation().value(d.occ[i]);  // throws outside the domain
  }
  return d;
}

}  // namespace

cplx evaluate_complex(const ClassicalObservable& obs, const FieldState& state) {
  check_dim(obs, state);
  const auto& c = obs.coeffs();
  const int L = obs.dim();
  cplx total = 0.0;

  if (obs.statistics() == Statistics::Bosonic) {
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) total += c(i, j) * std::conj(state[i]) * state[j];
    return total;
  }

  const auto site = fermion_site_data(obs, state);
  for (int i = 0; i < L; ++i) {
    total += c(i, i) * site.occ[i];
    for (int j = 0; j < L; ++j) {
      if (j == i || c(i, j) == cplx{}) continue;
      const double str = string_factor(site.occ, std::min(i, j), std::max(i, j));
      total += c(i, j) * std::conj(state[i]) * state[j] * site.f[i] * site.f[j] * str;
    }
  }
  return total;
}

double evaluate(const ClassicalObservable& obs, const FieldState& state) {
  return evaluate_complex(obs, state).real();
}

WirtingerGradient wirtinger_gradient(const ClassicalObservable& obs, const FieldState& state) {
  check_dim(obs, state);
  const auto& c = obs.coeffs();
  const int L = obs.dim();
  WirtingerGradient g{std::vector<cplx>(L), std::vector<cplx>(L)};

  if (obs.statistics() == Statistics::Bosonic) {
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) {
        g.d_psistar[i] += c(i, j) * state[j];
        g.d_psi[j] += c(i, j) * std::conj(state[i]);
      }
    return g;
  }

  const auto site = fermion_site_data(obs, state);
  const auto& sat = obs.saturation();
  std::vector<double> fprime(L, 0.0);
  for (int i = 0; i < L; ++i) {
    bool hops = false;
    for (int j = 0; j < L && !hops; ++j)
      hops = j != i && (c(i, j) != cplx{} || c(j, i) != cplx{});
    if (hops) fprime[i] = sat.derivative(site.occ[i]);
  }

  for (int i = 0; i < L; ++i) {
    g.d_psistar[i] += c(i, i) * state[i];
    g.d_psi[i] += c(i, i) * std::conj(state[i]);
  }

  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      if (j == i || c(i, j) == cplx{}) continue;
      const int lo = std::min(i, j);
      const int hi = std::max(i, j);
      const double str = string_factor(site.occ, lo, hi);
      const cplx pi_conj = std::conj(state[i]);
      const cplx pj = state[j];
      const double fi = site.f[i], fj = site.f[j];
      const cplx cij = c(i, j);

      // term = C_ij psi_i^* psi_j f(n_i) f(n_j) S_ij
      g.d_psistar[i] += cij * pj * fj * str * (fi + site.occ[i] * fprime[i]);
      g.d_psi[i] += cij * pi_conj * pi_conj * pj * fprime[i] * fj * str;
      g.d_psistar[j] += cij * pi_conj * pj * pj * fi * fprime[j] * str;
      g.d_psi[j] += cij * pi_conj * fi * str * (fj + site.occ[j] * fprime[j]);

      for (int k = lo + 1; k < hi; ++k) {
        const cplx rest = cij * pi_conj * pj * fi * fj * string_factor(site.occ, lo, hi, k);
        g.d_psistar[k] += rest * (-2.0 * state[k]);
        g.d_psi[k] += rest * (-2.0 * std::conj(state[k]));
      }
    }
  }
  return g;
}

}  // namespace qcl
