#include "qclimit/transforms.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qclimit/errors.hpp"

namespace qcl {

namespace {

double wrap_angle(double a) {
  // atan2 returns (-pi, pi]; map +pi onto -pi.
  return a >= std::numbers::pi ? a - 2.0 * std::numbers::pi : a;
}

}  // namespace

ActionAngleState fields_to_action_angle(const FieldState& state) {
  if (state.size() != 3) throw ValidationError("E_DIMENSION", "state", "the coordinate chain needs L = 3");
  ActionAngleState aa;
  for (std::size_t i = 0; i < 3; ++i) {
    aa.n[i] = std::norm(state[i]);
    aa.theta[i] = aa.n[i] == 0.0 ? 0.0 : wrap_angle(std::arg(state[i]));
  }
  return aa;
}

FieldState action_angle_to_fields(const ActionAngleState& aa) {
  std::vector<cplx> amps(3);
  for (std::size_t i = 0; i < 3; ++i) {
    if (aa.n[i] < 0.0) throw DomainError("action_angle_to_fields: negative occupation");
    amps[i] = std::polar(std::sqrt(aa.n[i]), aa.theta[i]);
  }
  return FieldState(std::move(amps));
}

ReducedAngleState action_angle_to_reduced(const ActionAngleState& aa) {
  ReducedAngleState r;
  r.n = aa.n[0];
  r.m = aa.n[2];
  r.N = aa.n[0] + aa.n[1] + aa.n[2];
  r.alpha = aa.theta[0] - aa.theta[1];
  r.beta = aa.theta[2] - aa.theta[1];
  r.Theta = aa.theta[1];
  return r;
}

ActionAngleState reduced_to_action_angle(const ReducedAngleState& r) {
  ActionAngleState aa;
  aa.n = {r.n, r.N - r.n - r.m, r.m};
  aa.theta = {r.alpha + r.Theta, r.Theta, r.beta + r.Theta};
  return aa;
}

ReducedState reduced_to_cartesian(const ReducedAngleState& r) {
  if (r.n < 0.0 || r.m < 0.0) throw DomainError("reduced_to_cartesian: n and m must be non-negative");
  const double sn = std::sqrt(r.n);
  const double sm = std::sqrt(r.m);
  return {sn * std::cos(r.alpha), sn * std::sin(r.alpha), sm * std::cos(r.beta), sm * std::sin(r.beta), r.N};
}

ReducedAngleState cartesian_to_reduced(const ReducedState& c, double Theta) {
  ReducedAngleState r;
  r.n = c.n();
  r.m = c.m();
  r.N = c.N;
  r.alpha = r.n == 0.0 ? 0.0 : std::atan2(c.x2, c.x1);
  r.beta = r.m == 0.0 ? 0.0 : std::atan2(c.y2, c.y1);
  r.Theta = Theta;
  return r;
}

ReducedState fields_to_cartesian(const FieldState& state) {
  return reduced_to_cartesian(action_angle_to_reduced(fields_to_action_angle(state)));
}

FieldState cartesian_to_fields(const ReducedState& r, double Theta) {
  auto aa = reduced_to_action_angle(cartesian_to_reduced(r, Theta));
  if (aa.n[1] < 0.0) {
    // Round-off at the n2 = 0 boundary.
    if (aa.n[1] > -1e-14 * std::max(1.0, r.N)) aa.n[1] = 0.0;
    else throw DomainError("cartesian_to_fields: N - n - m is negative");
  }
  return action_angle_to_fields(aa);
}

ReducedParams ReducedParams::cyclic(std::array<double, 3> eps, cplx J, SaturationFunction f) {
  return {eps, J, J, J, std::move(f)};
}

ReducedParams ReducedParams::linear(std::array<double, 3> eps, cplx J, SaturationFunction f) {
  return {eps, J, J, cplx{0.0}, std::move(f)};
}

ReducedParams ReducedParams::from_matrix(const HoppingMatrix& h, SaturationFunction f) {
  if (h.dim() != 3) throw ValidationError("E_DIMENSION", "h", "the reduced system needs L = 3");
  return {{h(0, 0).real(), h(1, 1).real(), h(2, 2).real()}, h(0, 1), h(1, 2), h(0, 2), std::move(f)};
}

HoppingMatrix ReducedParams::hopping_matrix() const {
  CMatrix h(3, 3);
  h << eps[0], h12, h13,
       std::conj(h12), eps[1], h23,
       std::conj(h13), std::conj(h23), eps[2];
  return HoppingMatrix(std::move(h));
}

bool in_reduced_domain(const ReducedState& r, const ReducedParams& p) {
  const double n = r.n(), m = r.m(), n2 = r.n2();
  return n2 >= 0.0 && p.saturation.in_domain(n) && p.saturation.in_domain(m) && p.saturation.in_domain(n2);
}

double reduced_hamiltonian(const ReducedState& r, const ReducedParams& p) {
  const double n = r.n(), m = r.m(), n2 = r.N - n - m;
  if (n2 < 0.0) {
    std::ostringstream os;
    os << "reduced_hamiltonian: N - n - m = " << n2 << " < 0";
    throw DomainError(os.str());
  }
  const auto& f = p.saturation;
  const double fn = f.value(n), fm = f.value(m), f2 = f.value(n2);
  const double root2 = std::sqrt(n2);

  const double a = 2.0 * (p.h12.real() * r.x1 + p.h12.imag() * r.x2);
  const double b = 2.0 * (p.h23.real() * r.y1 - p.h23.imag() * r.y2);
  const double c = 2.0 * (p.h13.real() * (r.x1 * r.y1 + r.x2 * r.y2) - p.h13.imag() * (r.x1 * r.y2 - r.x2 * r.y1));

  return n * (p.eps[0] - p.eps[1]) + m * (p.eps[2] - p.eps[1]) + r.N * p.eps[1] + a * root2 * fn * f2 +
         b * root2 * fm * f2 + c * (1.0 - 2.0 * n2) * fn * fm;
}

}  // namespace qcl
