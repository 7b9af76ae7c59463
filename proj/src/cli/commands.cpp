#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "qclimit/brackets.hpp"
#include "qclimit/cli.hpp"
#include "qclimit/errors.hpp"
#include "qclimit/formats.hpp"

namespace qcl::cli {

namespace fs = std::filesystem;

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
// exception is rethrown after all threads have stopped.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

// All files go through here, from the calling thread only.
class Writer {
 public:
  explicit Writer(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  }

  template <typename F>
  std::string write(const std::string& name, F&& body) {
    const fs::path p = dir_ / name;
    std::ofstream out(p);
    if (!out) throw Error("cannot open '" + p.string() + "' for writing");
    body(out);
    out.flush();
    if (!out) throw Error("write to '" + p.string() + "' failed");
    return p.string();
  }

 private:
  fs::path dir_;
};

std::vector<ReducedState> resolve_initials(const ReducedRun& run, std::uint64_t seed) {
  std::vector<ReducedState> out;
  for (const auto& r : run.initials)
    out.push_back(run.shell_project && run.E ? shell_project(r, *run.E, run.params, run.scan_free) : r);
  if (run.scan_count > 0) {
    const auto scanned = scan_on_shell(run.params, run.N, *run.E, run.scan_count, seed, run.scan_free);
    out.insert(out.end(), scanned.begin(), scanned.end());
  }
  return out;
}

const char* termination_name(Termination t) { return t == Termination::Completed ? "completed" : "boundary"; }

}  // namespace

// ---------------------------------------------------------------------------

int cmd_bracket_check(const ExperimentConfig& cfg, const BracketOptions& opts, std::ostream& log) {
  const auto run = parse_bracket_run(cfg);
  const auto& sys = cfg.system;
  const auto H = hamiltonian_observable(sys.h, sys.statistics, sys.saturation);
  const auto Ns = candidate_constants(diagonalize(sys.h), sys.statistics, sys.saturation);
  const auto Ntot = sum_observables(Ns, "N_total");

  struct Pair {
    const ClassicalObservable* f;
    const ClassicalObservable* g;
  };
  std::vector<Pair> pairs;
  for (const auto& n : Ns) pairs.push_back({&H, &n});
  for (std::size_t k = 0; k < Ns.size(); ++k)
    for (std::size_t l = k + 1; l < Ns.size(); ++l) pairs.push_back({&Ns[k], &Ns[l]});
  pairs.push_back({&H, &Ntot});

  std::vector<BracketReport> reports;
  for (const auto& p : pairs) reports.push_back(bracket_scan(*p.f, *p.g, run.sampler, run.samples, {}, cfg.workers));

  double worst = 0.0;
  for (const auto& r : reports) worst = std::max(worst, r.max_abs);
  const char* verdict = worst < kVanishThreshold     ? "all-vanish"
                        : worst > kViolationThreshold ? "violation-found"
                                                      : "inconclusive";

  Writer w(cfg.output.dir);
  for (const auto& r : reports)
    w.write("bracket_" + r.f_label + "_" + r.g_label + ".txt", [&](std::ostream& o) { write_bracket_report(o, r); });
  w.write("bracket_summary.txt", [&](std::ostream& o) {
    o << std::setprecision(17);
    o << "bracket-summary 1\n";
    for (const auto& r : reports) o << "pair " << r.f_label << ' ' << r.g_label << ' ' << r.max_abs << '\n';
    o << "verdict " << verdict << '\n';
  });

  log << std::setprecision(3);
  for (const auto& r : reports)
    log << "{" << r.f_label << ", " << r.g_label << "}  max |.| = " << r.max_abs << "  at sample " << r.argmax_index
        << '\n';
  log << "verdict: " << verdict << '\n';
  if (opts.expect_vanish && std::string(verdict) != "all-vanish") return kExitViolation;
  return kExitOk;
}

int cmd_integrate(const ExperimentConfig& cfg, std::ostream& log) {
  const auto run = parse_integrate_run(cfg).base;
  const auto initials = resolve_initials(run, cfg.seed);
  std::vector<Trajectory> trs(initials.size());
  parallel_for(initials.size(), cfg.workers,
               [&](std::size_t i) { trs[i] = integrate(initials[i], run.integrator, run.params); });

  Writer w(cfg.output.dir);
  for (std::size_t i = 0; i < trs.size(); ++i)
    w.write("trajectory_" + std::to_string(i) + ".csv",
            [&](std::ostream& o) { write_trajectory_csv(o, trs[i], run.params); });
  w.write("drift.csv", [&](std::ostream& o) {
    o << std::setprecision(17);
    o << "trajectory_id,energy_drift,number_drift,n_drift,m_drift,termination,t_stop\n";
    for (std::size_t i = 0; i < trs.size(); ++i)
      o << i << ',' << trs[i].energy_drift << ',' << trs[i].number_drift << ',' << trs[i].n_drift << ','
        << trs[i].m_drift << ',' << termination_name(trs[i].termination) << ',' << trs[i].t_stop << '\n';
  });

  log << std::setprecision(3);
  for (std::size_t i = 0; i < trs.size(); ++i)
    log << "trajectory " << i << ": " << trs[i].samples.size() << " samples, t_stop " << trs[i].t_stop << " ("
        << termination_name(trs[i].termination) << "), drift H " << trs[i].energy_drift << ", N "
        << trs[i].number_drift << ", n " << trs[i].n_drift << ", m " << trs[i].m_drift << '\n';
  return kExitOk;
}

int cmd_poincare(const ExperimentConfig& cfg, std::ostream& log) {
  const auto run = parse_poincare_run(cfg);
  const auto& base = run.base;
  const auto initials = resolve_initials(base, cfg.seed);
  const auto res = section(initials, run.section, *base.E, base.params, base.integrator, cfg.workers);
  const auto classes = classify_records(res, initials.size(), run.dimension);

  std::vector<ClassificationRow> rows(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) rows[i].cls = classes[i];
  if (run.lyapunov) {
    parallel_for(initials.size(), cfg.workers, [&](std::size_t i) {
      rows[i].lyapunov = lyapunov_max(initials[i], base.params, run.lyapunov_cfg).lambda;
      rows[i].has_lyapunov = true;
    });
  }

  Writer w(cfg.output.dir);
  if (cfg.output.wants("csv")) w.write("section.csv", [&](std::ostream& o) { write_section_csv(o, res.records); });
  if (cfg.output.wants("jsonl"))
    w.write("section.jsonl", [&](std::ostream& o) { write_section_jsonl(o, res.records); });
  if (cfg.output.wants("svg"))
    w.write("section.svg", [&](std::ostream& o) {
      write_section_svg(o, res.records, to_string(run.section.projection[0]), to_string(run.section.projection[1]));
    });
  w.write("classifications.csv", [&](std::ostream& o) { write_classifications_csv(o, rows); });

  std::size_t curve = 0, area = 0, amb = 0;
  for (const auto& c : classes) {
    if (c.shape == Shape::CurveLike) ++curve;
    else if (c.shape == Shape::AreaLike) ++area;
    else ++amb;
  }
  log << res.records.size() << " section records from " << initials.size() << " trajectories\n";
  log << "curve-like " << curve << ", area-like " << area << ", ambiguous " << amb << '\n';
  if (res.partial) log << "warning: some trajectories reached the domain boundary before t_end\n";
  return kExitOk;
}

int cmd_lyapunov(const ExperimentConfig& cfg, std::ostream& log) {
  const auto run = parse_lyapunov_run(cfg);
  const auto initials = resolve_initials(run.base, cfg.seed);
  std::vector<LyapunovResult> results(initials.size());
  parallel_for(initials.size(), cfg.workers,
               [&](std::size_t i) { results[i] = lyapunov_max(initials[i], run.base.params, run.lyapunov); });

  std::vector<LyapunovRow> rows;
  for (std::size_t i = 0; i < results.size(); ++i)
    for (const auto& [t, est] : results[i].convergence) rows.push_back({i, t, est});
  Writer w(cfg.output.dir);
  w.write("lyapunov.csv", [&](std::ostream& o) { write_lyapunov_csv(o, rows); });
  w.write("lyapunov_summary.csv", [&](std::ostream& o) {
    o << std::setprecision(17);
    o << "trajectory_id,lambda,partial,t_reached\n";
    for (std::size_t i = 0; i < results.size(); ++i)
      o << i << ',' << results[i].lambda << ',' << (results[i].partial ? 1 : 0) << ',' << results[i].t_reached << '\n';
  });

  log << std::setprecision(4);
  for (std::size_t i = 0; i < results.size(); ++i)
    log << "trajectory " << i << ": lambda_max " << results[i].lambda << (results[i].partial ? " (partial)" : "")
        << '\n';
  return kExitOk;
}

int cmd_shell(const ExperimentConfig& cfg, std::ostream& log) {
  const auto run = parse_shell_run(cfg);
  const auto points = shell_slice(run.slice, run.params);
  Writer w(cfg.output.dir);
  w.write("shell.csv", [&](std::ostream& o) { write_shell_csv(o, points, run.slice.free_coords()); });
  std::size_t band = 0;
  for (const auto& p : points) band += p.in_band ? 1 : 0;
  log << points.size() << " shell points (" << band << " inside the band)\n";
  if (points.empty()) log << "warning: the energy shell does not meet the slice (E = " << run.slice.E << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Classical limits of quadratic boson and fermion Hamiltonians"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out_dir;
  bool expect_vanish = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment configuration")->required();
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--workers", workers, "override the worker count")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "override the output directory");
    sub->add_option("--format", ov.formats, "output formats (csv, jsonl, svg)")->delimiter(',');
  };
  auto* bracket = app.add_subcommand("bracket-check", "scan Poisson brackets of H and the candidate constants");
  add_common(bracket);
  bracket->add_flag("--expect-vanish", expect_vanish, "exit with 4 unless every bracket vanishes");
  auto* integ = app.add_subcommand("integrate", "integrate the reduced three-site flow");
  add_common(integ);
  auto* poinc = app.add_subcommand("poincare", "surface of section and trajectory classification");
  add_common(poinc);
  auto* lyap = app.add_subcommand("lyapunov", "largest Lyapunov exponent");
  add_common(lyap);
  auto* shell = app.add_subcommand("shell", "slice of the energy shell on a grid");
  add_common(shell);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) ov.seed = seed;
  if (sub->count("--workers")) ov.workers = workers;
  if (sub->count("--out-dir")) ov.out_dir = out_dir;

  try {
    const auto cfg = load_config(config_path, ov);
    if (sub == bracket) return cmd_bracket_check(cfg, {expect_vanish}, out);
    if (sub == integ) return cmd_integrate(cfg, out);
    if (sub == poinc) return cmd_poincare(cfg, out);
    if (sub == lyap) return cmd_lyapunov(cfg, out);
    return cmd_shell(cfg, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NoRootError& e) {
    err << "error[E_NO_ROOT]: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const DomainError& e) {
    err << "error[E_DOMAIN_RUNTIME]: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error[E_RUNTIME]: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace qcl::cli
