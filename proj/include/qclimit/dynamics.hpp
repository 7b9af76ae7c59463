#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qclimit/transforms.hpp"

namespace qcl {

using Vec4 = std::array<double, 4>;

/// dH/d(x1, x2, y1, y2) of the reduced Hamiltonian.
///
/// A product term whose remaining factors vanish exactly contributes nothing,
/// even where the derivative of one factor is unbounded (e.g. sqrt(1 - x) at
/// x = 1). This is the one-sided limit taken along the domain boundary and
/// makes the all-occupied state of the square-root model a fixed point.
/// Throws BoundaryEvent outside the domain or where the result is not finite.
Vec4 reduced_gradient(const ReducedState& r, const ReducedParams& p);

/// Hamiltonian vector field with the constant factor 1/2 absorbed into time:
///   x1' = dH/dx2, x2' = -dH/dx1, y1' = dH/dy2, y2' = -dH/dy1.
/// In terms of the original field time t, the time used here is t / 2.
Vec4 flow_derivative(const ReducedState& r, const ReducedParams& p);

enum class Method { AdaptiveRK, ImplicitMidpoint };

struct IntegratorConfig {
  Method method = Method::AdaptiveRK;
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double max_step = 1.0;
  double initial_step = 1e-2;
  /// Step of the implicit midpoint rule.
  double fixed_step = 1e-2;
  double t_end = 1.0;
  /// Spacing of recorded samples; 0 records every accepted step.
  double sample_interval = 0.0;
  /// +1 integrates forward, -1 follows the reversed flow. Recorded times are
  /// elapsed times and always increase.
  int time_direction = 1;
  /// Below this step the boundary position counts as resolved.
  double boundary_resolution = 1e-12;

  /// Throws ValidationError for non-positive tolerances or times.
  void validate() const;
};

enum class Termination { Completed, Boundary };

/// One integration in progress. Each accepted step can be re-entered through
/// `state_at`, which re-runs the same one-step method from the start of the
/// step with a shorter step size (full-order dense output).
class FlowStepper {
 public:
  FlowStepper(const ReducedParams& params, double N, const IntegratorConfig& cfg, const Vec4& x0,
              double t0 = 0.0);

  /// Advances by one accepted step, never past t_limit. Returns false when a
  /// domain boundary was hit (state stays at the last admissible point).
  /// Throws StepSizeUnderflow when error control cannot make progress.
  bool step(double t_limit);
  /// Steps until t_limit is reached exactly; false on a boundary event.
  bool advance_to(double t_limit);

  double t() const { return t_; }
  const Vec4& x() const { return x_; }
  double t_prev() const { return t_prev_; }
  const Vec4& x_prev() const { return x_prev_; }
  /// State at t in [t_prev(), t()].
  Vec4 state_at(double t) const;

  /// Replace the current state (e.g. Lyapunov renormalisation).
  void reset(const Vec4& x);

  double N() const { return N_; }
  std::size_t rhs_evaluations() const { return n_rhs_; }

 private:
  Vec4 rhs(const Vec4& x) const;
  bool try_rk_step(double dt, Vec4& out, Vec4& err) const;
  bool try_midpoint_step(double dt, Vec4& out) const;

  ReducedParams params_;
  double N_;
  IntegratorConfig cfg_;
  Vec4 x_;
  double t_;
  Vec4 x_prev_;
  double t_prev_;
  double dt_;
  mutable std::size_t n_rhs_ = 0;
};

struct TrajectorySample {
  double t;
  ReducedState state;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  /// max over samples of |H(t) - H(0)| / max(1, |H(0)|)
  double energy_drift = 0.0;
  /// max over samples of |sum_i |psi_i|^2 - N| / max(1, N), through the
  /// inverse coordinate chain
  double number_drift = 0.0;
  /// max over samples of |n(t) - n(0)| and |m(t) - m(0)|
  double n_drift = 0.0;
  double m_drift = 0.0;
  Termination termination = Termination::Completed;
  double t_stop = 0.0;
};

/// Throws ValidationError if the initial state is outside the domain.
Trajectory integrate(const ReducedState& initial, const IntegratorConfig& cfg, const ReducedParams& params);

/// CSV with header t,x1,x2,y1,y2,H,N and 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& tr, const ReducedParams& params);
/// Reads back the columns written by write_trajectory_csv.
std::vector<std::array<double, 7>> read_trajectory_csv(std::istream& in);

struct LyapunovConfig {
  double t_total = 1000.0;
  double renorm_interval = 1.0;
  double perturbation = 1e-8;
  double transient_fraction = 0.1;
  std::uint64_t seed = 7;  ///< direction of the initial perturbation
  IntegratorConfig integrator{};
};

struct LyapunovResult {
  double lambda = 0.0;
  /// (time, running estimate) after each renormalisation
  std::vector<std::pair<double, double>> convergence;
  bool partial = false;
  double t_reached = 0.0;
};

/// Two-trajectory (Benettin) estimate of the largest Lyapunov exponent in
/// the reduced time variable. The estimate averages log-stretch factors
/// after the transient fraction; a boundary event ends the run early and
/// flags the result as partial.
LyapunovResult lyapunov_max(const ReducedState& initial, const ReducedParams& params, const LyapunovConfig& cfg);

}  // namespace qcl
