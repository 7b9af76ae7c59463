#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qclimit/dynamics.hpp"

namespace qcl {

enum class Coord { X1 = 0, X2 = 1, Y1 = 2, Y2 = 3 };
enum class Direction { Up, Down, Both };

std::string to_string(Coord c);
Coord coord_from_name(const std::string& name);
std::string to_string(Direction d);
Direction direction_from_name(const std::string& name);

/// Hyperplane `coordinate = level`; crossings with the requested sign of
/// the crossing velocity are recorded as (p, q) = projection.
struct SectionSpec {
  Coord coordinate = Coord::X2;
  double level = 0.0;
  Direction direction = Direction::Up;
  std::array<Coord, 2> projection{Coord::Y1, Coord::Y2};
  /// Stop a trajectory after this many records (0: run to t_end).
  std::size_t max_records = 0;

  void validate() const;
};

struct SectionRecord {
  std::size_t trajectory_id = 0;
  double t = 0.0;
  double p = 0.0;
  double q = 0.0;
  Vec4 state{};
  double energy = 0.0;
  /// +1 for an upward crossing, -1 for a downward one.
  int direction = 1;
};

struct SectionResult {
  /// Sorted by (trajectory_id, t).
  std::vector<SectionRecord> records;
  /// Per trajectory: how the integration ended and where.
  std::vector<Termination> termination;
  std::vector<double> t_stop;
  /// True when any trajectory hit the domain boundary before t_end.
  bool partial = false;
};

/// Crossing refinement target |coordinate - level|.
inline constexpr double kCrossingTolerance = 1e-10;
/// Initial states must satisfy |H - E| below this.
inline constexpr double kOnShellTolerance = 1e-9;

/// Integrates every initial state up to cfg.t_end and records the section
/// crossings. Work is spread over `workers` threads, one trajectory at a
/// time; the result does not depend on the number of workers.
/// Throws ValidationError (E_OFF_SHELL) for an initial state off the shell.
SectionResult section(const std::vector<ReducedState>& initials, const SectionSpec& spec, double E,
                      const ReducedParams& params, const IntegratorConfig& cfg, unsigned workers = 1);

/// Moves `free` so that |H - E| < 1e-11, picking the root closest to the
/// current value. Returns the state unchanged when it is already on the
/// shell. Throws NoRootError when H - E has no sign change in the domain.
ReducedState shell_project(const ReducedState& state, double E, const ReducedParams& params, Coord free);

/// Seeded random on-shell initial conditions: points uniform in the
/// admissible box are projected along `free`; points without a root are
/// skipped. Throws SamplingError after max_attempts misses in a row.
std::vector<ReducedState> scan_on_shell(const ReducedParams& params, double N, double E, std::size_t count,
                                        std::uint64_t seed, Coord free = Coord::X1,
                                        std::size_t max_attempts = 10000);

// ---------------------------------------------------------------------------

struct AxisRange {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t resolution = 2;
};

struct ShellSliceSpec {
  Coord fixed = Coord::Y1;
  double fixed_value = 0.0;
  /// Ranges of the remaining coordinates in increasing coordinate order.
  std::array<AxisRange, 3> axes{};
  double N = 0.0;
  double E = 0.0;
  double delta = 1e-2;

  void validate() const;
  std::array<Coord, 3> free_coords() const;
};

struct ShellPoint {
  std::array<double, 3> coords{};
  double H = 0.0;
  /// |H - E| < delta
  bool in_band = false;
  /// bit a set: H - E changes sign towards the next grid point along axis a
  std::uint8_t sign_change = 0;
};

/// Grid points inside the band or next to a sign change of H - E.
/// Points outside the domain are skipped.
std::vector<ShellPoint> shell_slice(const ShellSliceSpec& spec, const ReducedParams& params);

// ---------------------------------------------------------------------------

enum class Shape { CurveLike, AreaLike, Ambiguous };
std::string to_string(Shape s);

inline constexpr double kCurveDimension = 1.3;
inline constexpr double kAreaDimension = 1.7;

struct DimensionConfig {
  /// Fit range expressed as quantiles of the pair-distance distribution.
  double q_lo = 0.001;
  double q_hi = 0.05;
  /// Number of log-spaced radii between the two quantiles.
  std::size_t fit_points = 10;
  /// Record sets larger than this are thinned evenly.
  std::size_t max_points = 2000;
  std::size_t min_points = 50;
};

/// Grassberger-Procaccia correlation dimension of a point set, the slope
/// of log C(r) against log r over the configured quantile range.
/// Throws SamplingError for fewer than min_points points.
double correlation_dimension(const std::vector<Vec4>& points, const DimensionConfig& cfg = {});

Shape classify_dimension(double dim);

struct TrajectoryClass {
  std::size_t trajectory_id = 0;
  std::size_t records = 0;
  /// NaN when there are too few records.
  double dimension = 0.0;
  Shape shape = Shape::Ambiguous;
};

/// Per-trajectory correlation dimension of the full record states.
std::vector<TrajectoryClass> classify_records(const SectionResult& result, std::size_t trajectories,
                                              const DimensionConfig& cfg = {});

}  // namespace qcl
