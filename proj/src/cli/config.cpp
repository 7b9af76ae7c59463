#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "qclimit/cli.hpp"
#include "qclimit/errors.hpp"
#include "qclimit/matrix_io.hpp"

namespace qcl::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

ValidationError type_error(const std::string& path, const std::string& expected) {
  return ValidationError("E_TYPE", path, "expected " + expected);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!obj.is_object()) throw type_error(path, "an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ValidationError("E_UNKNOWN_KEY", join(path, key), "unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw type_error(path, "a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError("E_NONFINITE", path, "value must be finite");
  return d;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& path) {
  const json* v = find(obj, key);
  return v ? number(*v, join(path, key)) : fallback;
}

std::size_t count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw type_error(path, "a non-negative integer");
  return v.get<std::size_t>();
}

std::size_t count_or(const json& obj, const char* key, std::size_t fallback, const std::string& path) {
  const json* v = find(obj, key);
  return v ? count(*v, join(path, key)) : fallback;
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw type_error(path, "a string");
  return v.get<std::string>();
}

bool flag_or(const json& obj, const char* key, bool fallback, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw type_error(join(path, key), "true or false");
  return v->get<bool>();
}

cplx complex_value(const json& v, const std::string& path) {
  if (v.is_number()) return {number(v, path), 0.0};
  if (v.is_array() && v.size() == 2) return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
  throw type_error(path, "a number or a [re, im] pair");
}

template <typename T, typename F>
T rethrow_with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    const std::string prefix = e.code() + ": " + (e.field().empty() ? "" : e.field() + ": ");
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw ValidationError(e.code(), path, msg);
  }
}

CMatrix random_hermitian(std::size_t L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  CMatrix m(L, L);
  for (std::size_t i = 0; i < L; ++i) {
    m(i, i) = uni(rng);
    for (std::size_t j = i + 1; j < L; ++j) {
      const double re = uni(rng), im = uni(rng);
      m(i, j) = {re, im};
      m(j, i) = {re, -im};
    }
  }
  return m;
}

SystemConfig parse_system(const json& sys, std::uint64_t seed) {
  const std::string path = "system";
  check_keys(sys, {"L", "statistics", "saturation", "topology", "epsilon", "J", "h", "matrix_file"}, path);
  SystemConfig out;

  const json* jL = find(sys, "L");
  const json* jstat = find(sys, "statistics");
  const json* jsat = find(sys, "saturation");
  const json* jtopo = find(sys, "topology");
  const json* jh = find(sys, "h");
  const json* jfile = find(sys, "matrix_file");

  if (jstat)
    out.statistics = rethrow_with_path<Statistics>(join(path, "statistics"),
                                                   [&] { return statistics_from_name(text(*jstat, join(path, "statistics"))); });
  if (jsat)
    out.saturation = rethrow_with_path<SaturationFunction>(
        join(path, "saturation"), [&] { return saturation_from_name(text(*jsat, join(path, "saturation"))); });

  const int sources = (jtopo ? 1 : 0) + (jh ? 1 : 0) + (jfile ? 1 : 0);
  if (sources != 1)
    throw ValidationError("E_HOPPING_SOURCE", path,
                          "give exactly one of 'topology' (with epsilon and J), 'h' or 'matrix_file'");

  if (jfile) {
    const auto mf = read_matrix_file(text(*jfile, join(path, "matrix_file")));
    if (jstat && mf.statistics != out.statistics)
      throw ValidationError("E_CONFLICT", join(path, "statistics"), "differs from the matrix file");
    if (jsat && mf.saturation.name() != out.saturation.name())
      throw ValidationError("E_CONFLICT", join(path, "saturation"), "differs from the matrix file");
    out.statistics = mf.statistics;
    out.saturation = mf.saturation;
    out.h = mf.h;
    if (jL && count(*jL, join(path, "L")) != static_cast<std::size_t>(mf.h.dim()))
      throw ValidationError("E_CONFLICT", join(path, "L"), "differs from the matrix file");
    out.L = static_cast<std::size_t>(mf.h.dim());
    return out;
  }

  if (jh && jh->is_array()) {
    const std::size_t L = jh->size();
    if (L == 0) throw ValidationError("E_DIMENSION", join(path, "h"), "matrix is empty");
    if (jL && count(*jL, join(path, "L")) != L)
      throw ValidationError("E_CONFLICT", join(path, "L"), "differs from the size of 'h'");
    CMatrix m(L, L);
    for (std::size_t i = 0; i < L; ++i) {
      const std::string row_path = join(path, "h") + "[" + std::to_string(i) + "]";
      const json& row = (*jh)[i];
      if (!row.is_array() || row.size() != L)
        throw ValidationError("E_DIMENSION", row_path, "row must have " + std::to_string(L) + " entries");
      for (std::size_t j = 0; j < L; ++j) m(i, j) = complex_value(row[j], row_path + "[" + std::to_string(j) + "]");
    }
    out.L = L;
    out.h = rethrow_with_path<HoppingMatrix>(join(path, "h"), [&] { return HoppingMatrix(m); });
    return out;
  }

  if (!jL) throw ValidationError("E_MISSING", join(path, "L"), "required");
  out.L = count(*jL, join(path, "L"));
  if (out.L < 1) throw ValidationError("E_DIMENSION", join(path, "L"), "must be at least 1");

  if (jh) {
    if (!jh->is_string() || jh->get<std::string>() != "random")
      throw type_error(join(path, "h"), "a matrix or the string \"random\"");
    out.h = HoppingMatrix(random_hermitian(out.L, seed));
    return out;
  }

  const std::string topo = text(*jtopo, join(path, "topology"));
  if (topo == "linear") out.topology = Topology::Linear;
  else if (topo == "cyclic") out.topology = Topology::Cyclic;
  else throw ValidationError("E_TOPOLOGY", join(path, "topology"), "expected 'linear' or 'cyclic'");

  std::vector<double> eps(out.L, 0.0);
  if (const json* je = find(sys, "epsilon")) {
    if (je->is_number()) {
      std::fill(eps.begin(), eps.end(), number(*je, join(path, "epsilon")));
    } else if (je->is_array() && je->size() == out.L) {
      for (std::size_t i = 0; i < out.L; ++i) eps[i] = number((*je)[i], join(path, "epsilon") + "[" + std::to_string(i) + "]");
    } else {
      throw ValidationError("E_DIMENSION", join(path, "epsilon"), "expected a number or an array of length L");
    }
  }
  const json* jJ = find(sys, "J");
  if (!jJ) throw ValidationError("E_MISSING", join(path, "J"), "required with 'topology'");
  const cplx J = complex_value(*jJ, join(path, "J"));
  out.h = out.topology == Topology::Linear ? HoppingMatrix::linear_chain(eps, J) : HoppingMatrix::cyclic(eps, J);
  return out;
}

OutputConfig parse_output(const json& o) {
  check_keys(o, {"dir", "formats"}, "output");
  OutputConfig out;
  if (const json* d = find(o, "dir")) out.dir = text(*d, "output.dir");
  if (const json* f = find(o, "formats")) {
    if (!f->is_array()) throw type_error("output.formats", "an array of strings");
    out.formats.clear();
    for (const auto& e : *f) out.formats.push_back(text(e, "output.formats"));
  }
  return out;
}

void validate_formats(const std::vector<std::string>& formats) {
  for (const auto& f : formats)
    if (f != "csv" && f != "jsonl" && f != "svg")
      throw ValidationError("E_FORMAT", "output.formats", "unknown format '" + f + "' (csv, jsonl, svg)");
}

// ---------------------------------------------------------------------------
// reduced-system run blocks

ReducedState parse_initial(const json& v, const std::string& path, std::optional<double> N) {
  if (v.is_array() && v.size() == 4) {
    if (!N) throw ValidationError("E_MISSING", "run.N", "required for cartesian initial states");
    Vec4 x{};
    for (std::size_t i = 0; i < 4; ++i) x[i] = number(v[i], path + "[" + std::to_string(i) + "]");
    return ReducedState::from_coords(x, *N);
  }
  if (v.is_object()) {
    check_keys(v, {"x", "fields"}, path);
    if (const json* x = find(v, "x")) return parse_initial(*x, join(path, "x"), N);
    if (const json* f = find(v, "fields")) {
      if (!f->is_array() || f->size() != 3) throw ValidationError("E_DIMENSION", join(path, "fields"), "need 3 amplitudes");
      std::vector<cplx> amps;
      for (std::size_t i = 0; i < 3; ++i) amps.push_back(complex_value((*f)[i], join(path, "fields") + "[" + std::to_string(i) + "]"));
      const FieldState s(std::move(amps));
      auto r = fields_to_cartesian(s);
      if (N && std::abs(r.N - *N) > 1e-12 * std::max(1.0, *N))
        throw ValidationError("E_CONFLICT", path, "total occupation of the fields differs from run.N");
      return r;
    }
  }
  throw type_error(path, "[x1, x2, y1, y2] or {\"x\": [...]} or {\"fields\": [[re, im] x 3]}");
}

IntegratorConfig parse_integrator(const json& run, IntegratorConfig base) {
  const json* j = find(run, "integrator");
  if (!j) {
    base.validate();
    return base;
  }
  const std::string path = "run.integrator";
  check_keys(*j, {"method", "rel_tol", "abs_tol", "max_step", "initial_step", "fixed_step", "t_end", "sample_interval",
                  "time_direction", "boundary_resolution"},
             path);
  if (const json* m = find(*j, "method")) {
    const auto name = text(*m, join(path, "method"));
    if (name == "rk" || name == "adaptive") base.method = Method::AdaptiveRK;
    else if (name == "midpoint" || name == "implicit_midpoint") base.method = Method::ImplicitMidpoint;
    else throw ValidationError("E_METHOD", join(path, "method"), "expected 'rk' or 'midpoint'");
  }
  base.rel_tol = number_or(*j, "rel_tol", base.rel_tol, path);
  base.abs_tol = number_or(*j, "abs_tol", base.abs_tol, path);
  base.max_step = number_or(*j, "max_step", base.max_step, path);
  base.initial_step = number_or(*j, "initial_step", base.initial_step, path);
  base.fixed_step = number_or(*j, "fixed_step", base.fixed_step, path);
  base.t_end = number_or(*j, "t_end", base.t_end, path);
  base.sample_interval = number_or(*j, "sample_interval", base.sample_interval, path);
  base.boundary_resolution = number_or(*j, "boundary_resolution", base.boundary_resolution, path);
  if (const json* d = find(*j, "time_direction")) {
    if (!d->is_number_integer()) throw type_error(join(path, "time_direction"), "+1 or -1");
    base.time_direction = d->get<int>();
  }
  rethrow_with_path<int>(path, [&] {
    base.validate();
    return 0;
  });
  return base;
}

void require_reduced_system(const SystemConfig& sys) {
  if (sys.L != 3) throw ValidationError("E_REDUCED_SYSTEM", "system.L", "the reduced dynamics needs L = 3");
  if (sys.statistics != Statistics::Fermionic)
    throw ValidationError("E_REDUCED_SYSTEM", "system.statistics", "the reduced dynamics is fermionic");
}

void check_N(const SystemConfig& sys, double N) {
  if (!(N > 0.0)) throw ValidationError("E_DOMAIN", "run.N", "N must be positive");
  if (sys.saturation.kind() == SaturationFunction::Kind::SquareRoot && N > static_cast<double>(sys.L))
    throw ValidationError("E_SQRT_N_EXCEEDS_L", "run.N",
                          "with f = sqrt every occupation is at most 1, so N cannot exceed L");
}

ReducedRun parse_reduced(const ExperimentConfig& cfg, std::initializer_list<const char*> extra_keys,
                         IntegratorConfig integrator_defaults) {
  const auto& sys = cfg.system;
  require_reduced_system(sys);
  const json& run = cfg.run;
  std::set<std::string> allowed{"N", "E", "integrator", "initials", "scan", "shell_project"};
  for (const char* k : extra_keys) allowed.insert(k);
  if (!run.is_object()) throw type_error("run", "an object");
  for (const auto& [key, value] : run.items())
    if (!allowed.count(key)) throw ValidationError("E_UNKNOWN_KEY", join("run", key), "unknown key");

  ReducedRun out;
  out.params = ReducedParams::from_matrix(sys.h, sys.saturation);
  std::optional<double> N;
  if (const json* jN = find(run, "N")) N = number(*jN, "run.N");
  if (const json* jE = find(run, "E")) out.E = number(*jE, "run.E");
  out.integrator = parse_integrator(run, integrator_defaults);
  out.shell_project = flag_or(run, "shell_project", false, "run");

  if (const json* ji = find(run, "initials")) {
    if (!ji->is_array()) throw type_error("run.initials", "an array");
    for (std::size_t i = 0; i < ji->size(); ++i) {
      auto r = parse_initial((*ji)[i], "run.initials[" + std::to_string(i) + "]", N);
      if (!N) N = r.N;
      if (std::abs(r.N - *N) > 1e-12 * std::max(1.0, *N))
        throw ValidationError("E_CONFLICT", "run.initials[" + std::to_string(i) + "]",
                              "total occupation differs from the other initial states");
      out.initials.push_back(r);
    }
  }
  if (const json* js = find(run, "scan")) {
    check_keys(*js, {"count", "free"}, "run.scan");
    out.scan_count = count_or(*js, "count", 0, "run.scan");
    if (const json* f = find(*js, "free"))
      out.scan_free = rethrow_with_path<Coord>("run.scan.free", [&] { return coord_from_name(text(*f, "run.scan.free")); });
    if (out.scan_count > 0 && !out.E) throw ValidationError("E_MISSING", "run.E", "required for an on-shell scan");
  }
  if (!N) throw ValidationError("E_MISSING", "run.N", "required");
  out.N = *N;
  check_N(sys, out.N);
  for (auto& r : out.initials) r.N = out.N;

  for (std::size_t i = 0; i < out.initials.size(); ++i) {
    if (!in_reduced_domain(out.initials[i], out.params))
      throw ValidationError("E_DOMAIN", "run.initials[" + std::to_string(i) + "]",
                            "state lies outside the domain of the reduced system");
  }
  if (out.initials.empty() && out.scan_count == 0)
    throw ValidationError("E_MISSING", "run.initials", "give initial states or a scan with count > 0");
  return out;
}

}  // namespace

bool OutputConfig::wants(const std::string& f) const {
  return std::find(formats.begin(), formats.end(), f) != formats.end();
}

ExperimentConfig parse_config(const std::string& source, const Overrides& overrides) {
  json root;
  try {
    root = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ValidationError("E_CONFIG_SYNTAX", "config", e.what());
  }
  check_keys(root, {"schema_version", "seed", "workers", "system", "run", "output"}, "");
  const json* ver = find(root, "schema_version");
  if (!ver) throw ValidationError("E_MISSING", "schema_version", "required");
  if (!ver->is_number_integer() || ver->get<int>() != kSchemaVersion)
    throw ValidationError("E_SCHEMA_VERSION", "schema_version", "unsupported version (expected 1)");

  ExperimentConfig cfg;
  if (const json* s = find(root, "seed")) cfg.seed = count(*s, "seed");
  if (const json* w = find(root, "workers")) cfg.workers = static_cast<unsigned>(count(*w, "workers"));
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.workers) cfg.workers = *overrides.workers;
  if (cfg.workers == 0) throw ValidationError("E_WORKERS", "workers", "must be at least 1");

  const json* sys = find(root, "system");
  if (!sys) throw ValidationError("E_MISSING", "system", "required");
  cfg.system = parse_system(*sys, cfg.seed);
  if (const json* r = find(root, "run")) {
    if (!r->is_object()) throw type_error("run", "an object");
    cfg.run = *r;
  }
  if (const json* o = find(root, "output")) cfg.output = parse_output(*o);
  if (overrides.out_dir) cfg.output.dir = *overrides.out_dir;
  if (!overrides.formats.empty()) cfg.output.formats = overrides.formats;
  validate_formats(cfg.output.formats);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("E_IO", path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

// ---------------------------------------------------------------------------

BracketRun parse_bracket_run(const ExperimentConfig& cfg) {
  const json& run = cfg.run;
  check_keys(run, {"samples", "radius", "min_modulus", "max_total"}, "run");
  BracketRun out;
  out.samples = count_or(run, "samples", out.samples, "run");
  if (out.samples == 0) throw ValidationError("E_SAMPLES", "run.samples", "must be positive");
  out.sampler.sites = cfg.system.L;
  out.sampler.radius = number_or(run, "radius", out.sampler.radius, "run");
  out.sampler.min_modulus = number_or(run, "min_modulus", out.sampler.min_modulus, "run");
  out.sampler.max_total = number_or(run, "max_total", out.sampler.max_total, "run");
  out.sampler.seed = cfg.seed;
  if (!(out.sampler.radius > 0.0)) throw ValidationError("E_SAMPLER", "run.radius", "must be positive");
  if (out.sampler.min_modulus < 0.0 || out.sampler.min_modulus > out.sampler.radius)
    throw ValidationError("E_SAMPLER", "run.min_modulus", "must lie in [0, radius]");
  return out;
}

IntegrateRun parse_integrate_run(const ExperimentConfig& cfg) {
  IntegratorConfig defaults;
  defaults.t_end = 100.0;
  return {parse_reduced(cfg, {}, defaults)};
}

namespace {

LyapunovConfig parse_lyapunov_block(const json& j, const std::string& path, LyapunovConfig base) {
  base.t_total = number_or(j, "t_total", base.t_total, path);
  base.renorm_interval = number_or(j, "renorm_interval", base.renorm_interval, path);
  base.perturbation = number_or(j, "perturbation", base.perturbation, path);
  base.transient_fraction = number_or(j, "transient_fraction", base.transient_fraction, path);
  if (!(base.t_total > 0.0)) throw ValidationError("E_LYAPUNOV", join(path, "t_total"), "must be positive");
  if (!(base.renorm_interval > 0.0))
    throw ValidationError("E_LYAPUNOV", join(path, "renorm_interval"), "must be positive");
  if (!(base.perturbation > 0.0)) throw ValidationError("E_LYAPUNOV", join(path, "perturbation"), "must be positive");
  if (base.transient_fraction < 0.0 || base.transient_fraction >= 1.0)
    throw ValidationError("E_LYAPUNOV", join(path, "transient_fraction"), "must lie in [0, 1)");
  return base;
}

}  // namespace

PoincareRun parse_poincare_run(const ExperimentConfig& cfg) {
  IntegratorConfig defaults;
  defaults.rel_tol = defaults.abs_tol = 1e-12;
  defaults.t_end = 6000.0;
  PoincareRun out{parse_reduced(cfg, {"section", "dimension", "lyapunov"}, defaults), {}, {}, false, {}};
  if (!out.base.E) throw ValidationError("E_MISSING", "run.E", "required");
  const json& run = cfg.run;

  if (const json* s = find(run, "section")) {
    const std::string path = "run.section";
    check_keys(*s, {"coordinate", "level", "direction", "projection", "max_records"}, path);
    auto& sec = out.section;
    if (const json* c = find(*s, "coordinate"))
      sec.coordinate = rethrow_with_path<Coord>(join(path, "coordinate"),
                                                [&] { return coord_from_name(text(*c, join(path, "coordinate"))); });
    sec.level = number_or(*s, "level", sec.level, path);
    if (const json* d = find(*s, "direction"))
      sec.direction = rethrow_with_path<Direction>(
          join(path, "direction"), [&] { return direction_from_name(text(*d, join(path, "direction"))); });
    if (const json* p = find(*s, "projection")) {
      if (!p->is_array() || p->size() != 2) throw type_error(join(path, "projection"), "two coordinate names");
      for (std::size_t i = 0; i < 2; ++i)
        sec.projection[i] = rethrow_with_path<Coord>(
            join(path, "projection"), [&] { return coord_from_name(text((*p)[i], join(path, "projection"))); });
    } else {
      // First two coordinates other than the section coordinate, in order.
      std::size_t k = 0;
      for (std::size_t i = 0; i < 4 && k < 2; ++i)
        if (static_cast<Coord>(i) != sec.coordinate) sec.projection[k++] = static_cast<Coord>(i);
      if (sec.coordinate == Coord::X2) sec.projection = {Coord::Y1, Coord::Y2};
    }
    sec.max_records = count_or(*s, "max_records", 0, path);
    rethrow_with_path<int>(path, [&] {
      sec.validate();
      return 0;
    });
  }
  if (const json* d = find(run, "dimension")) {
    const std::string path = "run.dimension";
    check_keys(*d, {"q_lo", "q_hi", "fit_points", "max_points", "min_points"}, path);
    auto& dc = out.dimension;
    dc.q_lo = number_or(*d, "q_lo", dc.q_lo, path);
    dc.q_hi = number_or(*d, "q_hi", dc.q_hi, path);
    dc.fit_points = count_or(*d, "fit_points", dc.fit_points, path);
    dc.max_points = count_or(*d, "max_points", dc.max_points, path);
    dc.min_points = count_or(*d, "min_points", dc.min_points, path);
    if (!(dc.q_lo > 0.0) || !(dc.q_hi > dc.q_lo) || dc.q_hi >= 1.0 || dc.fit_points < 2)
      throw ValidationError("E_DIMENSION_FIT", path, "need 0 < q_lo < q_hi < 1 and fit_points >= 2");
  }
  out.lyapunov_cfg.t_total = 5000.0;
  if (const json* l = find(run, "lyapunov")) {
    const std::string path = "run.lyapunov";
    check_keys(*l, {"enabled", "t_total", "renorm_interval", "perturbation", "transient_fraction"}, path);
    out.lyapunov = flag_or(*l, "enabled", true, path);
    out.lyapunov_cfg = parse_lyapunov_block(*l, path, out.lyapunov_cfg);
  }
  out.lyapunov_cfg.seed = cfg.seed;
  out.lyapunov_cfg.integrator = out.base.integrator;

  if (!out.base.shell_project) {
    for (std::size_t i = 0; i < out.base.initials.size(); ++i) {
      const double dH = std::abs(reduced_hamiltonian(out.base.initials[i], out.base.params) - *out.base.E);
      if (!(dH < kOnShellTolerance)) {
        std::ostringstream os;
        os << "|H - E| = " << dH << " exceeds " << kOnShellTolerance << "; set run.shell_project to adjust it";
        throw ValidationError("E_OFF_SHELL", "run.initials[" + std::to_string(i) + "]", os.str());
      }
    }
  }
  return out;
}

LyapunovRun parse_lyapunov_run(const ExperimentConfig& cfg) {
  IntegratorConfig defaults;
  LyapunovRun out{parse_reduced(cfg, {"lyapunov"}, defaults), {}};
  if (const json* l = find(cfg.run, "lyapunov")) {
    check_keys(*l, {"t_total", "renorm_interval", "perturbation", "transient_fraction"}, "run.lyapunov");
    out.lyapunov = parse_lyapunov_block(*l, "run.lyapunov", out.lyapunov);
  }
  out.lyapunov.seed = cfg.seed;
  out.lyapunov.integrator = out.base.integrator;
  return out;
}

ShellRun parse_shell_run(const ExperimentConfig& cfg) {
  require_reduced_system(cfg.system);
  const json& run = cfg.run;
  check_keys(run, {"N", "E", "fixed", "fixed_value", "axes", "delta"}, "run");
  ShellRun out;
  out.params = ReducedParams::from_matrix(cfg.system.h, cfg.system.saturation);
  auto& s = out.slice;
  const json* jN = find(run, "N");
  const json* jE = find(run, "E");
  if (!jN) throw ValidationError("E_MISSING", "run.N", "required");
  if (!jE) throw ValidationError("E_MISSING", "run.E", "required");
  s.N = number(*jN, "run.N");
  s.E = number(*jE, "run.E");
  check_N(cfg.system, s.N);
  if (const json* f = find(run, "fixed"))
    s.fixed = rethrow_with_path<Coord>("run.fixed", [&] { return coord_from_name(text(*f, "run.fixed")); });
  s.fixed_value = number_or(run, "fixed_value", 0.0, "run");
  s.delta = number_or(run, "delta", s.delta, "run");
  const double R = std::sqrt(s.N);
  for (auto& a : s.axes) a = {-R, R, 41};
  if (const json* ax = find(run, "axes")) {
    if (!ax->is_array() || ax->size() != 3) throw type_error("run.axes", "three axis objects");
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string path = "run.axes[" + std::to_string(i) + "]";
      check_keys((*ax)[i], {"lo", "hi", "resolution"}, path);
      s.axes[i].lo = number_or((*ax)[i], "lo", s.axes[i].lo, path);
      s.axes[i].hi = number_or((*ax)[i], "hi", s.axes[i].hi, path);
      s.axes[i].resolution = count_or((*ax)[i], "resolution", s.axes[i].resolution, path);
    }
  }
  rethrow_with_path<int>("run", [&] {
    s.validate();
    return 0;
  });
  return out;
}

}  // namespace qcl::cli
