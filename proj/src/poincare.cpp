#include "qclimit/poincare.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "qclimit/errors.hpp"

namespace qcl {

namespace {

constexpr const char* kCoordNames[] = {"x1", "x2", "y1", "y2"};

std::size_t idx(Coord c) { return static_cast<std::size_t>(c); }

}  // namespace

std::string to_string(Coord c) { return kCoordNames[idx(c)]; }

Coord coord_from_name(const std::string& name) {
  for (std::size_t i = 0; i < 4; ++i)
    if (name == kCoordNames[i]) return static_cast<Coord>(i);
  throw ValidationError("E_COORDINATE", "coordinate", "unknown coordinate '" + name + "'");
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::Up:
      return "+";
    case Direction::Down:
      return "-";
    case Direction::Both:
      return "both";
  }
  return "?";
}

Direction direction_from_name(const std::string& name) {
  if (name == "+" || name == "up") return Direction::Up;
  if (name == "-" || name == "down") return Direction::Down;
  if (name == "both") return Direction::Both;
  throw ValidationError("E_DIRECTION", "direction", "expected '+', '-' or 'both', got '" + name + "'");
}

std::string to_string(Shape s) {
  switch (s) {
    case Shape::CurveLike:
      return "curve-like";
    case Shape::AreaLike:
      return "area-like";
    case Shape::Ambiguous:
      return "ambiguous";
  }
  return "?";
}

void SectionSpec::validate() const {
  if (projection[0] == coordinate || projection[1] == coordinate || projection[0] == projection[1])
    throw ValidationError("E_PROJECTION", "section.projection",
                          "projection coordinates must be distinct and differ from the section coordinate");
  if (!std::isfinite(level)) throw ValidationError("E_NONFINITE", "section.level", "level must be finite");
}

// ---------------------------------------------------------------------------
// sections

namespace {

struct TrajectoryOutcome {
  std::vector<SectionRecord> records;
  Termination termination = Termination::Completed;
  double t_stop = 0.0;
};

TrajectoryOutcome run_one(std::size_t id, const ReducedState& init, const SectionSpec& spec,
                          const ReducedParams& params, const IntegratorConfig& cfg) {
  TrajectoryOutcome out;
  const std::size_t c = idx(spec.coordinate);
  auto g = [&](const Vec4& x) { return x[c] - spec.level; };

  FlowStepper st(params, init.N, cfg, init.coords());
  double gp = g(st.x());
  while (st.t() < cfg.t_end) {
    if (!st.step(cfg.t_end)) {
      out.termination = Termination::Boundary;
      break;
    }
    const double gn = g(st.x());
    const bool up = gp < 0.0 && gn >= 0.0;
    const bool down = gp > 0.0 && gn <= 0.0;
    gp = gn;
    if (!((up && spec.direction != Direction::Down) || (down && spec.direction != Direction::Up))) continue;

    double tc = st.t();
    Vec4 xc = st.x();
    if (std::abs(gn) >= 0.1 * kCrossingTolerance) {
      auto fn = [&](double t) { return g(st.state_at(t)); };
      std::uintmax_t iters = 200;
      try {
        const auto [a, b] = boost::math::tools::toms748_solve(
            fn, st.t_prev(), st.t(), g(st.x_prev()), gn, boost::math::tools::eps_tolerance<double>(52), iters);
        const Vec4 xa = st.state_at(a), xb = st.state_at(b);
        if (std::abs(g(xa)) <= std::abs(g(xb))) {
          tc = a;
          xc = xa;
        } else {
          tc = b;
          xc = xb;
        }
      } catch (const std::exception&) {
        // Keep the step end; the offset stays visible in the record.
      }
    }
    SectionRecord rec;
    rec.trajectory_id = id;
    rec.t = tc;
    rec.state = xc;
    rec.p = xc[idx(spec.projection[0])];
    rec.q = xc[idx(spec.projection[1])];
    rec.energy = reduced_hamiltonian(ReducedState::from_coords(xc, init.N), params);
    rec.direction = up ? 1 : -1;
    out.records.push_back(rec);
    if (spec.max_records > 0 && out.records.size() >= spec.max_records) break;
  }
  out.t_stop = st.t();
  return out;
}

}  // namespace

SectionResult section(const std::vector<ReducedState>& initials, const SectionSpec& spec, double E,
                      const ReducedParams& params, const IntegratorConfig& cfg, unsigned workers) {
  spec.validate();
  cfg.validate();
  for (std::size_t i = 0; i < initials.size(); ++i) {
    if (!in_reduced_domain(initials[i], params)) {
      std::ostringstream os;
      os << "initial state " << i << " lies outside the domain";
      throw ValidationError("E_DOMAIN", "initials", os.str());
    }
    const double dH = std::abs(reduced_hamiltonian(initials[i], params) - E);
    if (!(dH < kOnShellTolerance)) {
      std::ostringstream os;
      os << "initial state " << i << " is off the energy shell (|H - E| = " << dH << ")";
      throw ValidationError("E_OFF_SHELL", "initials", os.str());
    }
  }

  std::vector<TrajectoryOutcome> outcomes(initials.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= initials.size()) return;
      try {
        outcomes[i] = run_one(i, initials[i], spec, params, cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = initials.size();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, initials.size()))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  SectionResult res;
  for (auto& o : outcomes) {
    res.records.insert(res.records.end(), o.records.begin(), o.records.end());
    res.termination.push_back(o.termination);
    res.t_stop.push_back(o.t_stop);
    if (o.termination == Termination::Boundary) res.partial = true;
  }
  return res;
}

// ---------------------------------------------------------------------------
// energy shell

namespace {

constexpr double kShellTolerance = 1e-11;
constexpr std::size_t kProjectGrid = 4001;

// H - E along one coordinate; NaN outside the domain.
double shell_offset(Vec4 x, std::size_t c, double v, double N, double E, const ReducedParams& params) {
  x[c] = v;
  const auto r = ReducedState::from_coords(x, N);
  if (!in_reduced_domain(r, params)) return std::numeric_limits<double>::quiet_NaN();
  return reduced_hamiltonian(r, params) - E;
}

}  // namespace

ReducedState shell_project(const ReducedState& state, double E, const ReducedParams& params, Coord free) {
  const auto x0 = state.coords();
  const std::size_t c = idx(free);
  const double N = state.N;
  if (in_reduced_domain(state, params) && std::abs(reduced_hamiltonian(state, params) - E) < kShellTolerance)
    return state;

  // |v|^2 never exceeds N inside the domain.
  const double R = std::sqrt(std::max(0.0, N));
  if (R == 0.0) throw NoRootError("shell_project: the domain is a single point");
  std::vector<double> vs(kProjectGrid), fs(kProjectGrid);
  for (std::size_t i = 0; i < kProjectGrid; ++i) {
    vs[i] = -R + 2.0 * R * static_cast<double>(i) / static_cast<double>(kProjectGrid - 1);
    fs[i] = shell_offset(x0, c, vs[i], N, E, params);
  }

  // Brackets ordered by distance from the current value.
  std::vector<std::size_t> brackets;
  for (std::size_t i = 0; i + 1 < kProjectGrid; ++i)
    if (std::isfinite(fs[i]) && std::isfinite(fs[i + 1]) && ((fs[i] <= 0.0) != (fs[i + 1] <= 0.0)))
      brackets.push_back(i);
  const double v0 = x0[c];
  std::stable_sort(brackets.begin(), brackets.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(0.5 * (vs[a] + vs[a + 1]) - v0) < std::abs(0.5 * (vs[b] + vs[b + 1]) - v0);
  });

  for (std::size_t i : brackets) {
    auto fn = [&](double v) {
      const double f = shell_offset(x0, c, v, N, E, params);
      if (!std::isfinite(f)) throw DomainError("shell_project: left the domain");
      return f;
    };
    try {
      double best_v = vs[i], best_f = fs[i];
      if (std::abs(fs[i + 1]) < std::abs(best_f)) {
        best_v = vs[i + 1];
        best_f = fs[i + 1];
      }
      if (std::abs(best_f) >= kShellTolerance) {
        std::uintmax_t iters = 200;
        const auto [a, b] = boost::math::tools::toms748_solve(fn, vs[i], vs[i + 1], fs[i], fs[i + 1],
                                                              boost::math::tools::eps_tolerance<double>(53), iters);
        const double fa = fn(a), fb = fn(b);
        best_v = std::abs(fa) <= std::abs(fb) ? a : b;
        best_f = std::min(std::abs(fa), std::abs(fb));
      }
      if (std::abs(best_f) < kShellTolerance) {
        auto x = x0;
        x[c] = best_v;
        return ReducedState::from_coords(x, N);
      }
    } catch (const DomainError&) {
    } catch (const boost::math::evaluation_error&) {
    }
  }
  std::ostringstream os;
  os << "shell_project: H - E has no usable sign change along " << to_string(free) << " (E = " << E << ")";
  throw NoRootError(os.str());
}

std::vector<ReducedState> scan_on_shell(const ReducedParams& params, double N, double E, std::size_t count,
                                        std::uint64_t seed, Coord free, std::size_t max_attempts) {
  if (!(N > 0.0)) throw ValidationError("E_DOMAIN", "N", "N must be positive");
  std::mt19937_64 rng(seed);
  const double R = std::sqrt(N);
  std::uniform_real_distribution<double> uni(-R, R);
  std::vector<ReducedState> out;
  std::size_t misses = 0;
  while (out.size() < count) {
    const auto r = ReducedState::from_coords({uni(rng), uni(rng), uni(rng), uni(rng)}, N);
    bool ok = false;
    if (in_reduced_domain(r, params) && r.n2() > 0.0) {
      try {
        const auto s = shell_project(r, E, params, free);
        ok = s.n2() > 0.0;
        if (ok) out.push_back(s);
      } catch (const NoRootError&) {
      }
    }
    if (ok) {
      misses = 0;
    } else if (++misses >= max_attempts) {
      std::ostringstream os;
      os << "scan_on_shell: no on-shell state found in " << max_attempts << " attempts (E = " << E
         << ", N = " << N << ")";
      throw SamplingError(os.str());
    }
  }
  return out;
}

void ShellSliceSpec::validate() const {
  if (!(delta > 0.0)) throw ValidationError("E_DELTA", "shell.delta", "band half-width must be positive");
  for (const auto& a : axes) {
    if (a.resolution < 2) throw ValidationError("E_GRID", "shell.axes", "resolution must be at least 2");
    if (!(a.hi > a.lo)) throw ValidationError("E_GRID", "shell.axes", "axis range must have hi > lo");
  }
}

std::array<Coord, 3> ShellSliceSpec::free_coords() const {
  std::array<Coord, 3> out{};
  std::size_t k = 0;
  for (std::size_t i = 0; i < 4; ++i)
    if (i != idx(fixed)) out[k++] = static_cast<Coord>(i);
  return out;
}

std::vector<ShellPoint> shell_slice(const ShellSliceSpec& spec, const ReducedParams& params) {
  spec.validate();
  const auto free = spec.free_coords();
  const auto& ax = spec.axes;
  const std::size_t n0 = ax[0].resolution, n1 = ax[1].resolution, n2 = ax[2].resolution;
  auto value = [&](std::size_t a, std::size_t i) {
    return ax[a].lo + (ax[a].hi - ax[a].lo) * static_cast<double>(i) / static_cast<double>(ax[a].resolution - 1);
  };

  std::vector<double> H(n0 * n1 * n2, std::numeric_limits<double>::quiet_NaN());
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> double& { return H[(i * n1 + j) * n2 + k]; };
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < n1; ++j)
      for (std::size_t k = 0; k < n2; ++k) {
        Vec4 x{};
        x[idx(spec.fixed)] = spec.fixed_value;
        x[idx(free[0])] = value(0, i);
        x[idx(free[1])] = value(1, j);
        x[idx(free[2])] = value(2, k);
        const auto r = ReducedState::from_coords(x, spec.N);
        if (in_reduced_domain(r, params)) at(i, j, k) = reduced_hamiltonian(r, params);
      }

  std::vector<ShellPoint> out;
  auto above = [&](double h) { return h - spec.E > 0.0; };
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < n1; ++j)
      for (std::size_t k = 0; k < n2; ++k) {
        const double h = at(i, j, k);
        if (std::isnan(h)) continue;
        ShellPoint p;
        p.coords = {value(0, i), value(1, j), value(2, k)};
        p.H = h;
        p.in_band = std::abs(h - spec.E) < spec.delta;
        const double nb[3] = {i + 1 < n0 ? at(i + 1, j, k) : std::numeric_limits<double>::quiet_NaN(),
                              j + 1 < n1 ? at(i, j + 1, k) : std::numeric_limits<double>::quiet_NaN(),
                              k + 1 < n2 ? at(i, j, k + 1) : std::numeric_limits<double>::quiet_NaN()};
        for (std::uint8_t a = 0; a < 3; ++a)
          if (!std::isnan(nb[a]) && above(nb[a]) != above(h)) p.sign_change |= static_cast<std::uint8_t>(1u << a);
        if (p.in_band || p.sign_change) out.push_back(p);
      }
  return out;
}

// ---------------------------------------------------------------------------
// correlation dimension

double correlation_dimension(const std::vector<Vec4>& points, const DimensionConfig& cfg) {
  if (points.size() < std::max<std::size_t>(cfg.min_points, 3)) {
    std::ostringstream os;
    os << "correlation_dimension: " << points.size() << " points, need at least " << cfg.min_points;
    throw SamplingError(os.str());
  }
  if (!(cfg.q_lo > 0.0) || !(cfg.q_hi > cfg.q_lo) || cfg.q_hi >= 1.0 || cfg.fit_points < 2)
    throw ValidationError("E_DIMENSION_FIT", "dimension", "invalid quantile range");

  std::vector<Vec4> pts;
  if (points.size() > cfg.max_points) {
    for (std::size_t i = 0; i < cfg.max_points; ++i) pts.push_back(points[i * points.size() / cfg.max_points]);
  } else {
    pts = points;
  }

  std::vector<double> d;
  d.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
      if (s > 0.0) d.push_back(std::sqrt(s));
    }
  if (d.size() < 10) throw SamplingError("correlation_dimension: too few distinct points");
  std::sort(d.begin(), d.end());
  const auto M = static_cast<double>(d.size());
  const double r1 = d[static_cast<std::size_t>(cfg.q_lo * M)];
  const double r2 = d[static_cast<std::size_t>(cfg.q_hi * M)];
  if (!(r2 > r1)) throw SamplingError("correlation_dimension: degenerate distance distribution");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < cfg.fit_points; ++i) {
    const double r = r1 * std::pow(r2 / r1, static_cast<double>(i) / static_cast<double>(cfg.fit_points - 1));
    const auto below = static_cast<double>(std::lower_bound(d.begin(), d.end(), r) - d.begin());
    if (below <= 0.0) continue;
    const double x = std::log(r), y = std::log(below / M);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw SamplingError("correlation_dimension: empty fit range");
  const double nn = static_cast<double>(n);
  return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

Shape classify_dimension(double dim) {
  if (std::isnan(dim)) return Shape::Ambiguous;
  if (dim < kCurveDimension) return Shape::CurveLike;
  if (dim > kAreaDimension) return Shape::AreaLike;
  return Shape::Ambiguous;
}

std::vector<TrajectoryClass> classify_records(const SectionResult& result, std::size_t trajectories,
                                              const DimensionConfig& cfg) {
  std::vector<std::vector<Vec4>> per(trajectories);
  for (const auto& r : result.records)
    if (r.trajectory_id < trajectories) per[r.trajectory_id].push_back(r.state);
  std::vector<TrajectoryClass> out(trajectories);
  for (std::size_t i = 0; i < trajectories; ++i) {
    out[i].trajectory_id = i;
    out[i].records = per[i].size();
    try {
      out[i].dimension = correlation_dimension(per[i], cfg);
    } catch (const SamplingError&) {
      out[i].dimension = std::numeric_limits<double>::quiet_NaN();
    }
    out[i].shape = classify_dimension(out[i].dimension);
  }
  return out;
}

}  // namespace qcl
