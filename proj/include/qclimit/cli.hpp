#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qclimit/brackets.hpp"
#include "qclimit/dynamics.hpp"
#include "qclimit/hamiltonian.hpp"
#include "qclimit/poincare.hpp"

namespace qcl::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3, kExitViolation = 4 };

enum class Topology { None, Linear, Cyclic };

struct SystemConfig {
  std::size_t L = 0;
  Statistics statistics = Statistics::Fermionic;
  SaturationFunction saturation = SaturationFunction::exponential();
  Topology topology = Topology::None;
  HoppingMatrix h{CMatrix::Zero(1, 1)};
};

struct OutputConfig {
  std::string dir = ".";
  std::vector<std::string> formats{"csv"};
  bool wants(const std::string& f) const;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  SystemConfig system;
  nlohmann::json run = nlohmann::json::object();
  OutputConfig output;
};

/// Command-line values that replace the file's settings.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
  std::vector<std::string> formats;
};

/// Parses and validates the system, output and top-level fields. JSON
/// syntax errors are reported with their line number; all other problems
/// throw ValidationError with the dotted path of the offending field.
ExperimentConfig parse_config(const std::string& text, const Overrides& overrides = {});
ExperimentConfig load_config(const std::string& path, const Overrides& overrides = {});

// Typed run blocks. Each parser validates everything the command needs
// before any computation starts.

struct BracketRun {
  std::size_t samples = 200;
  SamplerSpec sampler;
};
BracketRun parse_bracket_run(const ExperimentConfig& cfg);

/// Parameters shared by the commands on the reduced three-site system.
struct ReducedRun {
  ReducedParams params;
  double N = 0.0;
  std::optional<double> E;
  IntegratorConfig integrator;
  std::vector<ReducedState> initials;
  /// Random on-shell initial conditions (count 0: none).
  std::size_t scan_count = 0;
  Coord scan_free = Coord::X1;
  bool shell_project = false;
};

struct IntegrateRun {
  ReducedRun base;
};
IntegrateRun parse_integrate_run(const ExperimentConfig& cfg);

struct PoincareRun {
  ReducedRun base;
  SectionSpec section;
  DimensionConfig dimension;
  bool lyapunov = false;
  LyapunovConfig lyapunov_cfg;
};
PoincareRun parse_poincare_run(const ExperimentConfig& cfg);

struct LyapunovRun {
  ReducedRun base;
  LyapunovConfig lyapunov;
};
LyapunovRun parse_lyapunov_run(const ExperimentConfig& cfg);

struct ShellRun {
  ReducedParams params;
  ShellSliceSpec slice;
};
ShellRun parse_shell_run(const ExperimentConfig& cfg);

// Commands. Each writes its files below cfg.output.dir, prints a short
// summary to `log` and returns the process exit code.

struct BracketOptions {
  bool expect_vanish = false;
};

int cmd_bracket_check(const ExperimentConfig& cfg, const BracketOptions& opts, std::ostream& log);
int cmd_integrate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_poincare(const ExperimentConfig& cfg, std::ostream& log);
int cmd_lyapunov(const ExperimentConfig& cfg, std::ostream& log);
int cmd_shell(const ExperimentConfig& cfg, std::ostream& log);

/// Full driver used by the executable: argv parsing, config loading,
/// dispatch and the mapping from exceptions to exit codes.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qcl::cli
