#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qclimit/saturation.hpp"

namespace qcl {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

enum class Statistics { Bosonic, Fermionic };

std::string to_string(Statistics s);
Statistics statistics_from_name(const std::string& name);

/// Tolerance used for hermiticity checks of coefficient matrices.
inline constexpr double kHermitianTolerance = 1e-12;

/// Largest |A_ij - conj(A_ji)|.
double hermitian_defect(const CMatrix& m);

/// Hermitian one-body coefficient matrix h of H = sum_ij h_ij a_i^+ a_j.
class HoppingMatrix {
 public:
  /// Throws ValidationError (E_NONHERMITIAN / E_DIMENSION) on bad input.
  explicit HoppingMatrix(CMatrix entries);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const CMatrix& entries() const { return entries_; }
  cplx operator()(int i, int j) const { return entries_(i, j); }

  /// Nearest-neighbour chain: h_ii = eps_i, h_{i,i+1} = J, h_{i+1,i} = J^*.
  static HoppingMatrix linear_chain(std::span<const double> eps, cplx hopping);
  /// Ring: the chain plus h_{1,L} = J, h_{L,1} = J^* (for L = 3 every
  /// upper-triangle entry is J).
  static HoppingMatrix cyclic(std::span<const double> eps, cplx hopping);

 private:
  CMatrix entries_;
};

/// Eigen-decomposition u^+ h u = diag(w), eigenvalues ascending.
struct SpectralData {
  CMatrix unitary;
  Eigen::VectorXd eigenvalues;
};

/// Diagonalizes h. Each eigenvector column is phase-fixed so that its
/// largest-magnitude entry (lowest index on ties) is real and positive.
/// Degenerate eigenspaces come back in whatever orthonormal basis the
/// solver produced.
SpectralData diagonalize(const HoppingMatrix& h);

/// Classical phase-space point: L complex amplitudes psi_i.
class FieldState {
 public:
  FieldState() = default;
  /// Throws ValidationError when an amplitude is NaN or infinite.
  explicit FieldState(std::vector<cplx> amplitudes);

  std::size_t size() const { return amps_.size(); }
  const cplx& operator[](std::size_t i) const { return amps_[i]; }
  std::span<const cplx> amplitudes() const { return amps_; }

  /// |psi_i|^2
  double occupation(std::size_t i) const { return std::norm(amps_[i]); }
  /// sum_i |psi_i|^2
  double total_occupation() const;

  /// Copy with psi_i -> psi_i * exp(i phase).
  FieldState with_global_phase(double phase) const;

 private:
  std::vector<cplx> amps_;
};

/// Real phase-space function obtained from a hermitian coefficient matrix C
/// by the bosonic or fermionic replacement rules:
///
///   bosonic:   sum_ij C_ij psi_i^* psi_j
///   fermionic: sum_i C_ii |psi_i|^2
///            + sum_{i != j} C_ij psi_i^* psi_j f(|psi_i|^2) f(|psi_j|^2)
///                           prod_{min(i,j) < k < max(i,j)} (1 - 2|psi_k|^2)
///
/// The string product always runs over the site indices in basis order,
/// whatever the hopping graph looks like.
class ClassicalObservable {
 public:
  ClassicalObservable(CMatrix coeffs, Statistics statistics,
                      SaturationFunction saturation = SaturationFunction::exponential(),
                      std::string label = {});

  const CMatrix& coeffs() const { return coeffs_; }
  Statistics statistics() const { return statistics_; }
  const SaturationFunction& saturation() const { return saturation_; }
  const std::string& label() const { return label_; }
  int dim() const { return static_cast<int>(coeffs_.rows()); }

  ClassicalObservable with_label(std::string label) const;

 private:
  CMatrix coeffs_;
  Statistics statistics_;
  SaturationFunction saturation_;
  std::string label_;
};

/// The classical Hamiltonian built from h.
ClassicalObservable hamiltonian_observable(const HoppingMatrix& h, Statistics statistics,
                                           const SaturationFunction& saturation);

/// The L candidate constants N_k with C^(k)_ij = u_ik conj(u_jk),
/// labelled "N_1" .. "N_L".
std::vector<ClassicalObservable> candidate_constants(const SpectralData& spectrum,
                                                     Statistics statistics,
                                                     const SaturationFunction& saturation);

/// Sum of observables sharing statistics and saturation (coefficients add).
ClassicalObservable sum_observables(std::span<const ClassicalObservable> terms, std::string label);

/// Full complex value of the replacement formula. For hermitian C its
/// imaginary part is round-off only.
cplx evaluate_complex(const ClassicalObservable& obs, const FieldState& state);

/// Real value. Throws DomainError when a fermionic state leaves the
/// saturation domain.
double evaluate(const ClassicalObservable& obs, const FieldState& state);

/// Wirtinger derivatives dF/dpsi_i and dF/dpsi_i^*.
struct WirtingerGradient {
  std::vector<cplx> d_psi;
  std::vector<cplx> d_psistar;
};

/// Exact analytic gradient. Throws DerivativeDomainError where a needed
/// saturation derivative does not exist (e.g. sqrt at |psi_i|^2 = 1).
WirtingerGradient wirtinger_gradient(const ClassicalObservable& obs, const FieldState& state);

}  // namespace qcl
