#include "qclimit/saturation.hpp"

#include <sstream>

#include "qclimit/errors.hpp"

namespace qcl {

SaturationFunction SaturationFunction::exponential() {
  return SaturationFunction(Kind::Exponential, "exp", Interval{}, {});
}

SaturationFunction SaturationFunction::square_root() {
  return SaturationFunction(Kind::SquareRoot, "sqrt",
                            Interval{-std::numeric_limits<double>::infinity(), 1.0}, {});
}

SaturationFunction SaturationFunction::custom(std::string name, std::function<Dual(Dual)> fn,
                                              Interval domain) {
  if (!fn) throw ValidationError("E_SATURATION", name, "custom saturation function is empty");
  if (!(domain.lo < domain.hi))
    throw ValidationError("E_SATURATION", name, "custom saturation domain is empty");
  return SaturationFunction(Kind::Custom, std::move(name), domain, std::move(fn));
}

namespace {
[[noreturn]] void out_of_domain(const std::string& name, double x, bool derivative) {
  std::ostringstream os;
  os << "saturation function '" << name << "' " << (derivative ? "not differentiable" : "undefined")
     << " at x = " << x;
  if (derivative) throw DerivativeDomainError(os.str());
  throw DomainError(os.str());
}
}  // namespace

double SaturationFunction::value(double x) const {
  if (!in_domain(x)) out_of_domain(name_, x, false);
  switch (kind_) {
    case Kind::Exponential:
      return std::exp(-x);
    case Kind::SquareRoot:
      return std::sqrt(1.0 - x);
    case Kind::Custom:
      return fn_(Dual{x, 0.0}).v;
  }
  return 0.0;
}

double SaturationFunction::derivative(double x) const {
  if (!differentiable_at(x)) out_of_domain(name_, x, true);
  switch (kind_) {
    case Kind::Exponential:
      return -std::exp(-x);
    case Kind::SquareRoot:
      return -0.5 / std::sqrt(1.0 - x);
    case Kind::Custom:
      return fn_(Dual::variable(x)).d;
  }
  return 0.0;
}

SaturationFunction saturation_from_name(const std::string& name) {
  if (name == "exp" || name == "exponential") return SaturationFunction::exponential();
  if (name == "sqrt" || name == "square_root" || name == "squareroot")
    return SaturationFunction::square_root();
  throw ValidationError("E_SATURATION", "saturation", "unknown saturation function '" + name + "'");
}

}  // namespace qcl
