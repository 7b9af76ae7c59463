#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace qcl {

/// Forward-mode dual number: value plus first derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}

  static constexpr Dual variable(double x) { return {x, 1.0}; }
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
inline Dual pow(Dual a, double p) {
  const double r = std::pow(a.v, p);
  return {r, p * std::pow(a.v, p - 1.0) * a.d};
}
inline Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }

/// Closed interval [lo, hi]; infinite bounds allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lo && x <= hi; }
  /// Strict interior with respect to the finite bounds.
  bool interior(double x) const {
    return (std::isinf(lo) || x > lo) && (std::isinf(hi) || x < hi);
  }
};

/// The function f in the fermionic hopping replacement
/// psi_i^* psi_j f(|psi_i|^2) f(|psi_j|^2).
///
/// Values are accepted on the closed domain; derivatives only in its strict
/// interior (with respect to finite bounds). Custom functions are written over
/// `Dual` so that their derivative comes from forward-mode differentiation,
/// and they must declare their domain explicitly.
class SaturationFunction {
 public:
  enum class Kind { Exponential, SquareRoot, Custom };

  /// f(x) = exp(-x), domain all reals.
  static SaturationFunction exponential();
  /// f(x) = sqrt(1 - x), domain x <= 1.
  static SaturationFunction square_root();
  static SaturationFunction custom(std::string name, std::function<Dual(Dual)> fn, Interval domain);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const Interval& domain() const { return domain_; }

  bool in_domain(double x) const { return domain_.contains(x); }
  bool differentiable_at(double x) const { return domain_.interior(x); }

  /// Throws DomainError outside the declared domain.
  double value(double x) const;
  /// Throws DerivativeDomainError on the domain boundary or outside.
  double derivative(double x) const;

 private:
  SaturationFunction(Kind kind, std::string name, Interval domain, std::function<Dual(Dual)> fn)
      : kind_(kind), name_(std::move(name)), domain_(domain), fn_(std::move(fn)) {}

  Kind kind_;
  std::string name_;
  Interval domain_;
  std::function<Dual(Dual)> fn_;  // only used by Custom
};

/// Parses "exp" / "sqrt" (and a few spellings thereof).
SaturationFunction saturation_from_name(const std::string& name);

}  // namespace qcl
