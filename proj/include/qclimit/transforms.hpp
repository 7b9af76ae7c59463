#pragma once

#include <array>

#include "qclimit/hamiltonian.hpp"

namespace qcl {

/// Occupations n_i = |psi_i|^2 and phases theta_i = arg psi_i of a
/// three-site state. theta_i lies in [-pi, pi) and is 0 where n_i = 0.
struct ActionAngleState {
  std::array<double, 3> n{};
  std::array<double, 3> theta{};
};

/// (n, alpha), (m, beta), (N, Theta) with n = n_1, m = n_3, N = n_1 + n_2 + n_3,
/// alpha = theta_1 - theta_2, beta = theta_3 - theta_2, Theta = theta_2.
struct ReducedAngleState {
  double n = 0.0;
  double alpha = 0.0;
  double m = 0.0;
  double beta = 0.0;
  double N = 0.0;
  double Theta = 0.0;

  double n2() const { return N - n - m; }
};

/// Reduced cartesian coordinates: x1 + i x2 = sqrt(n) e^{i alpha},
/// y1 + i y2 = sqrt(m) e^{i beta}; N is carried as a parameter.
struct ReducedState {
  double x1 = 0.0;
  double x2 = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
  double N = 0.0;

  std::array<double, 4> coords() const { return {x1, x2, y1, y2}; }
  static ReducedState from_coords(const std::array<double, 4>& c, double N) {
    return {c[0], c[1], c[2], c[3], N};
  }
  double n() const { return x1 * x1 + x2 * x2; }
  double m() const { return y1 * y1 + y2 * y2; }
  /// Occupation of the middle site, N - n - m.
  double n2() const { return N - n() - m(); }
};

ActionAngleState fields_to_action_angle(const FieldState& state);
FieldState action_angle_to_fields(const ActionAngleState& aa);

ReducedAngleState action_angle_to_reduced(const ActionAngleState& aa);
ActionAngleState reduced_to_action_angle(const ReducedAngleState& r);

/// Throws DomainError for negative n or m. Theta is dropped.
ReducedState reduced_to_cartesian(const ReducedAngleState& r);
/// Inverse of reduced_to_cartesian with the cyclic angle supplied.
ReducedAngleState cartesian_to_reduced(const ReducedState& r, double Theta = 0.0);

/// Convenience compositions of the full chain.
ReducedState fields_to_cartesian(const FieldState& state);
FieldState cartesian_to_fields(const ReducedState& r, double Theta = 0.0);

/// Parameters of the three-site reduced Hamiltonian:
///
///   H = n (e1 - e2) + m (e3 - e2) + N e2
///     + 2 Re(h12 (x1 - i x2)) sqrt(n2) f(n) f(n2)
///     + 2 Re(h23 (y1 + i y2)) sqrt(n2) f(m) f(n2)
///     + 2 Re(h13 (x1 - i x2)(y1 + i y2)) (1 - 2 n2) f(n) f(m)
///
/// with n2 = N - n - m. The ring has h12 = h23 = h13 = J, the chain h13 = 0.
struct ReducedParams {
  std::array<double, 3> eps{1.0, 1.0, 1.0};
  cplx h12{0.0};
  cplx h23{0.0};
  cplx h13{0.0};
  SaturationFunction saturation = SaturationFunction::exponential();

  static ReducedParams cyclic(std::array<double, 3> eps, cplx J, SaturationFunction f);
  static ReducedParams linear(std::array<double, 3> eps, cplx J, SaturationFunction f);
  /// Takes eps and couplings from a 3x3 hopping matrix.
  static ReducedParams from_matrix(const HoppingMatrix& h, SaturationFunction f);

  HoppingMatrix hopping_matrix() const;
};

/// Throws DomainError when n2 < 0 or an argument leaves the saturation domain.
double reduced_hamiltonian(const ReducedState& r, const ReducedParams& p);

/// True when n2 >= 0 and n, m, n2 lie in the saturation domain.
bool in_reduced_domain(const ReducedState& r, const ReducedParams& p);

}  // namespace qcl
