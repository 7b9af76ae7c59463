#include "qclimit/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "qclimit/errors.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// reduced gradient

namespace {

enum class FactorKind { Root, Saturation, String };

// One factor phi(z) of a product term, z one of n, m, n2.
struct Factor {
  FactorKind kind;
  double z;
  Vec4 dz;  // dz / d(x1, x2, y1, y2)
  double value;
};

double factor_slope(const Factor& f, const SaturationFunction& sat) {
  switch (f.kind) {
    case FactorKind::Root:
      return 0.5 / std::sqrt(f.z);
    case FactorKind::Saturation:
      return sat.derivative(f.z);
    case FactorKind::String:
      return -2.0;
  }
  return 0.0;
}

// Adds d(P * prod phi_a) to grad, skipping factor derivatives whose
// co-factor product is exactly zero.
template <std::size_t K>
void add_product_term(Vec4& grad, double P, const Vec4& dP, const std::array<Factor, K>& factors,
                      const SaturationFunction& sat) {
  double prod = 1.0;
  for (const auto& f : factors) prod *= f.value;
  for (std::size_t v = 0; v < 4; ++v) grad[v] += dP[v] * prod;
  if (P == 0.0) return;
  for (std::size_t a = 0; a < K; ++a) {
    double others = P;
    for (std::size_t b = 0; b < K; ++b)
      if (b != a) others *= factors[b].value;
    if (others == 0.0) continue;
    const double slope = factor_slope(factors[a], sat);
    for (std::size_t v = 0; v < 4; ++v)
      if (factors[a].dz[v] != 0.0) grad[v] += others * slope * factors[a].dz[v];
  }
}

}  // namespace

Vec4 reduced_gradient(const ReducedState& r, const ReducedParams& p) {
  const auto& sat = p.saturation;
  const double n = r.n(), m = r.m(), n2 = r.N - n - m;
  if (n2 < 0.0 || !sat.in_domain(n) || !sat.in_domain(m) || !sat.in_domain(n2)) {
    std::ostringstream os;
    os << "reduced state outside the domain (n=" << n << ", m=" << m << ", n2=" << n2 << ")";
    throw BoundaryEvent(os.str());
  }

  const Vec4 dn{2 * r.x1, 2 * r.x2, 0, 0};
  const Vec4 dm{0, 0, 2 * r.y1, 2 * r.y2};
  const Vec4 dn2{-2 * r.x1, -2 * r.x2, -2 * r.y1, -2 * r.y2};
  const double fn = sat.value(n), fm = sat.value(m), f2 = sat.value(n2);

  Vec4 g{2 * r.x1 * (p.eps[0] - p.eps[1]), 2 * r.x2 * (p.eps[0] - p.eps[1]),
         2 * r.y1 * (p.eps[2] - p.eps[1]), 2 * r.y2 * (p.eps[2] - p.eps[1])};

  try {
    // 2 Re(h12 (x1 - i x2)) sqrt(n2) f(n) f(n2)
    if (p.h12 != cplx{}) {
      const double P = 2.0 * (p.h12.real() * r.x1 + p.h12.imag() * r.x2);
      const Vec4 dP{2.0 * p.h12.real(), 2.0 * p.h12.imag(), 0, 0};
      add_product_term<3>(g, P, dP,
                          {{{FactorKind::Root, n2, dn2, std::sqrt(n2)},
                            {FactorKind::Saturation, n, dn, fn},
                            {FactorKind::Saturation, n2, dn2, f2}}},
                          sat);
    }
    // 2 Re(h23 (y1 + i y2)) sqrt(n2) f(m) f(n2)
    if (p.h23 != cplx{}) {
      const double P = 2.0 * (p.h23.real() * r.y1 - p.h23.imag() * r.y2);
      const Vec4 dP{0, 0, 2.0 * p.h23.real(), -2.0 * p.h23.imag()};
      add_product_term<3>(g, P, dP,
                          {{{FactorKind::Root, n2, dn2, std::sqrt(n2)},
                            {FactorKind::Saturation, m, dm, fm},
                            {FactorKind::Saturation, n2, dn2, f2}}},
                          sat);
    }
    // 2 Re(h13 (x1 - i x2)(y1 + i y2)) (1 - 2 n2) f(n) f(m)
    if (p.h13 != cplx{}) {
      const double hr = p.h13.real(), hi = p.h13.imag();
      const double P = 2.0 * (hr * (r.x1 * r.y1 + r.x2 * r.y2) - hi * (r.x1 * r.y2 - r.x2 * r.y1));
      const Vec4 dP{2.0 * (hr * r.y1 - hi * r.y2), 2.0 * (hr * r.y2 + hi * r.y1),
                    2.0 * (hr * r.x1 + hi * r.x2), 2.0 * (hr * r.x2 - hi * r.x1)};
      add_product_term<3>(g, P, dP,
                          {{{FactorKind::String, n2, dn2, 1.0 - 2.0 * n2},
                            {FactorKind::Saturation, n, dn, fn},
                            {FactorKind::Saturation, m, dm, fm}}},
                          sat);
    }
  } catch (const DerivativeDomainError& e) {
    throw BoundaryEvent(std::string("reduced gradient at the domain boundary: ") + e.what());
  }

  for (double v : g)
    if (!std::isfinite(v)) throw BoundaryEvent("reduced gradient is not finite (domain boundary)");
  return g;
}

Vec4 flow_derivative(const ReducedState& r, const ReducedParams& p) {
  const Vec4 g = reduced_gradient(r, p);
  return {g[1], -g[0], g[3], -g[2]};
}

// ---------------------------------------------------------------------------
// integrator

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
    throw ValidationError("E_NEGATIVE_TOLERANCE", "integrator", "tolerances must be positive");
  if (!(t_end > 0.0)) throw ValidationError("E_TIME", "integrator", "t_end must be positive");
  if (!(max_step > 0.0) || !(initial_step > 0.0) || !(fixed_step > 0.0))
    throw ValidationError("E_STEP", "integrator", "step sizes must be positive");
  if (sample_interval < 0.0) throw ValidationError("E_STEP", "integrator", "sample_interval must be >= 0");
  if (time_direction != 1 && time_direction != -1)
    throw ValidationError("E_DIRECTION", "integrator", "time_direction must be +1 or -1");
}

namespace {

using Rkf78 = boost::numeric::odeint::runge_kutta_fehlberg78<Vec4>;

}  // namespace

FlowStepper::FlowStepper(const ReducedParams& params, double N, const IntegratorConfig& cfg, const Vec4& x0,
                         double t0)
    : params_(params), N_(N), cfg_(cfg), x_(x0), t_(t0), x_prev_(x0), t_prev_(t0), dt_(cfg.initial_step) {
  cfg_.validate();
  if (cfg_.method == Method::ImplicitMidpoint) dt_ = cfg_.fixed_step;
}

Vec4 FlowStepper::rhs(const Vec4& x) const {
  ++n_rhs_;
  Vec4 v = flow_derivative(ReducedState::from_coords(x, N_), params_);
  if (cfg_.time_direction < 0)
    for (auto& c : v) c = -c;
  return v;
}

bool FlowStepper::try_rk_step(double dt, Vec4& out, Vec4& err) const {
  Rkf78 stepper;
  auto sys = [this](const Vec4& x, Vec4& dxdt, double) { dxdt = rhs(x); };
  try {
    stepper.do_step(sys, x_, t_, out, dt, err);
  } catch (const DomainError&) {
    return false;
  }
  for (double c : out)
    if (!std::isfinite(c)) return false;
  return in_reduced_domain(ReducedState::from_coords(out, N_), params_);
}

bool FlowStepper::try_midpoint_step(double dt, Vec4& out) const {
  try {
    Vec4 f0 = rhs(x_);
    for (std::size_t i = 0; i < 4; ++i) out[i] = x_[i] + dt * f0[i];
    for (int iter = 0; iter < 200; ++iter) {
      Vec4 mid;
      for (std::size_t i = 0; i < 4; ++i) mid[i] = 0.5 * (x_[i] + out[i]);
      const Vec4 f = rhs(mid);
      double change = 0.0, scale = 1.0;
      for (std::size_t i = 0; i < 4; ++i) {
        const double next = x_[i] + dt * f[i];
        change = std::max(change, std::abs(next - out[i]));
        scale = std::max(scale, std::abs(next));
        out[i] = next;
      }
      if (change <= 1e-15 * scale) break;
    }
  } catch (const DomainError&) {
    return false;
  }
  for (double c : out)
    if (!std::isfinite(c)) return false;
  return in_reduced_domain(ReducedState::from_coords(out, N_), params_);
}

bool FlowStepper::step(double t_limit) {
  if (t_limit <= t_) return true;

  if (cfg_.method == Method::ImplicitMidpoint) {
    const double dt = std::min(cfg_.fixed_step, t_limit - t_);
    Vec4 out;
    if (!try_midpoint_step(dt, out)) return false;
    x_prev_ = x_;
    t_prev_ = t_;
    x_ = out;
    t_ = (dt == t_limit - t_) ? t_limit : t_ + dt;
    return true;
  }

  double dt = std::min({dt_, cfg_.max_step, t_limit - t_});
  Vec4 out, err;
  for (;;) {
    if (!try_rk_step(dt, out, err)) {
      dt *= 0.5;
      if (dt < cfg_.boundary_resolution) {
        dt_ = dt;
        return false;
      }
      continue;
    }
    double e = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(x_[i]), std::abs(out[i]));
      e = std::max(e, std::abs(err[i]) / sc);
    }
    if (e <= 1.0) {
      x_prev_ = x_;
      t_prev_ = t_;
      x_ = out;
      t_ = (dt == t_limit - t_) ? t_limit : t_ + dt;
      const double grow = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -1.0 / 8.0), 0.2, 5.0);
      // Keep the unclipped proposal so that landing on t_limit does not shrink later steps.
      dt_ = std::max(dt * grow, std::min(dt_, dt * 5.0));
      return true;
    }
    dt *= std::max(0.2, 0.9 * std::pow(e, -1.0 / 7.0));
    if (dt < 1e-14 * std::max(1.0, std::abs(t_))) {
      std::ostringstream os;
      os << "step size underflow at t = " << t_;
      throw StepSizeUnderflow(os.str());
    }
  }
}

bool FlowStepper::advance_to(double t_limit) {
  while (t_ < t_limit)
    if (!step(t_limit)) return false;
  return true;
}

Vec4 FlowStepper::state_at(double t) const {
  if (t <= t_prev_) return x_prev_;
  if (t >= t_) return x_;
  const double dt = t - t_prev_;
  Vec4 out;
  if (cfg_.method == Method::ImplicitMidpoint) {
    FlowStepper tmp(*this);
    tmp.x_ = x_prev_;
    tmp.t_ = t_prev_;
    if (!tmp.try_midpoint_step(dt, out)) return x_prev_;
    return out;
  }
  Rkf78 stepper;
  auto sys = [this](const Vec4& x, Vec4& dxdt, double) { dxdt = rhs(x); };
  stepper.do_step(sys, x_prev_, t_prev_, out, dt);
  return out;
}

void FlowStepper::reset(const Vec4& x) {
  x_ = x;
  x_prev_ = x;
  t_prev_ = t_;
}

// ---------------------------------------------------------------------------

namespace {

double number_through_chain(const ReducedState& r) {
  return cartesian_to_fields(r).total_occupation();
}

}  // namespace

Trajectory integrate(const ReducedState& initial, const IntegratorConfig& cfg, const ReducedParams& params) {
  cfg.validate();
  if (!in_reduced_domain(initial, params))
    throw ValidationError("E_DOMAIN", "initial", "initial state lies outside the reduced domain");

  Trajectory tr;
  const double H0 = reduced_hamiltonian(initial, params);
  const double n0 = initial.n(), m0 = initial.m();
  const double N = initial.N;

  auto record = [&](double t, const Vec4& x) {
    const auto s = ReducedState::from_coords(x, N);
    tr.samples.push_back({t, s});
    tr.energy_drift = std::max(tr.energy_drift, std::abs(reduced_hamiltonian(s, params) - H0) / std::max(1.0, std::abs(H0)));
    tr.number_drift = std::max(tr.number_drift, std::abs(number_through_chain(s) - N) / std::max(1.0, N));
    tr.n_drift = std::max(tr.n_drift, std::abs(s.n() - n0));
    tr.m_drift = std::max(tr.m_drift, std::abs(s.m() - m0));
  };

  FlowStepper st(params, N, cfg, initial.coords());
  record(0.0, initial.coords());
  double next_sample = cfg.sample_interval;
  while (st.t() < cfg.t_end) {
    if (!st.step(cfg.t_end)) {
      tr.termination = Termination::Boundary;
      break;
    }
    if (cfg.sample_interval > 0.0) {
      while (next_sample <= st.t() + 1e-12 * cfg.t_end) {
        const double ts = std::min(next_sample, st.t());
        if (ts > tr.samples.back().t) record(ts, st.state_at(ts));
        next_sample += cfg.sample_interval;
      }
    } else {
      record(st.t(), st.x());
    }
  }
  if (tr.samples.back().t < st.t()) record(st.t(), st.x());
  tr.t_stop = st.t();
  return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr, const ReducedParams& params) {
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "t,x1,x2,y1,y2,H,N\n";
  for (const auto& s : tr.samples) {
    const auto& r = s.state;
    out << s.t << ',' << r.x1 << ',' << r.x2 << ',' << r.y1 << ',' << r.y2 << ',' << reduced_hamiltonian(r, params)
        << ',' << r.N << '\n';
  }
  out.precision(prec);
}

std::vector<std::array<double, 7>> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t,x1,x2,y1,y2,H,N")
    throw ValidationError("E_CSV", "trajectory", "unexpected header");
  std::vector<std::array<double, 7>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 7> row{};
    std::istringstream is(line);
    for (std::size_t i = 0; i < 7; ++i) {
      std::string cell;
      if (!std::getline(is, cell, ',')) throw ValidationError("E_CSV", "trajectory", "short row");
      row[i] = std::stod(cell);
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Lyapunov exponent

LyapunovResult lyapunov_max(const ReducedState& initial, const ReducedParams& params, const LyapunovConfig& cfg) {
  cfg.integrator.validate();
  if (!(cfg.t_total > 0.0) || !(cfg.renorm_interval > 0.0) || !(cfg.perturbation > 0.0) ||
      cfg.transient_fraction < 0.0 || cfg.transient_fraction >= 1.0)
    throw ValidationError("E_LYAPUNOV", "lyapunov", "invalid Lyapunov configuration");
  if (!in_reduced_domain(initial, params))
    throw ValidationError("E_DOMAIN", "initial", "initial state lies outside the reduced domain");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss;
  Vec4 dir{};
  double norm = 0.0;
  while (norm < 1e-3) {
    for (auto& d : dir) d = gauss(rng);
    norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2] + dir[3] * dir[3]);
  }
  const Vec4 x0 = initial.coords();
  Vec4 xp;
  for (std::size_t i = 0; i < 4; ++i) xp[i] = x0[i] + cfg.perturbation * dir[i] / norm;

  FlowStepper ref(params, initial.N, cfg.integrator, x0);
  FlowStepper pert(params, initial.N, cfg.integrator, xp);

  LyapunovResult res;
  const double t_transient = cfg.transient_fraction * cfg.t_total;
  double sum_all = 0.0, sum_late = 0.0, t_late = 0.0;
  const auto intervals = static_cast<long>(std::ceil(cfg.t_total / cfg.renorm_interval - 1e-9));
  for (long k = 1; k <= intervals; ++k) {
    const double t_target = std::min(cfg.t_total, k * cfg.renorm_interval);
    const double t_start = ref.t();
    if (!ref.advance_to(t_target) || !pert.advance_to(t_target)) {
      res.partial = true;
      break;
    }
    double d = 0.0;
    Vec4 delta;
    for (std::size_t i = 0; i < 4; ++i) {
      delta[i] = pert.x()[i] - ref.x()[i];
      d += delta[i] * delta[i];
    }
    d = std::sqrt(d);
    if (!(d > 0.0)) {
      res.partial = true;
      break;
    }
    const double stretch = std::log(d / cfg.perturbation);
    sum_all += stretch;
    if (t_start >= t_transient - 1e-12) {
      sum_late += stretch;
      t_late += t_target - t_start;
    }
    Vec4 renorm;
    for (std::size_t i = 0; i < 4; ++i) renorm[i] = ref.x()[i] + delta[i] * (cfg.perturbation / d);
    if (!in_reduced_domain(ReducedState::from_coords(renorm, initial.N), params)) {
      res.partial = true;
      break;
    }
    pert.reset(renorm);
    const double estimate = t_late > 0.0 ? sum_late / t_late : sum_all / t_target;
    res.convergence.emplace_back(t_target, estimate);
  }
  res.t_reached = ref.t();
  if (!res.convergence.empty()) res.lambda = res.convergence.back().second;
  return res;
}

}  // namespace qcl
