#include "qclimit/brackets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "qclimit/errors.hpp"

namespace qcl {

cplx poisson_bracket(const WirtingerGradient& dF, const WirtingerGradient& dG, BracketConvention conv) {
  if (dF.d_psi.size() != dG.d_psi.size())
    throw ValidationError("E_DIMENSION", "bracket", "gradients have different sizes");
  cplx sum = 0.0;
  for (std::size_t k = 0; k < dF.d_psi.size(); ++k)
    sum += dF.d_psi[k] * dG.d_psistar[k] - dF.d_psistar[k] * dG.d_psi[k];
  return conv.scale * sum;
}

cplx poisson_bracket(const ClassicalObservable& F, const ClassicalObservable& G, const FieldState& state,
                     BracketConvention conv) {
  return poisson_bracket(wirtinger_gradient(F, state), wirtinger_gradient(G, state), conv);
}

// ---------------------------------------------------------------------------
// sampling and scans

namespace {

bool admissible(const SamplerSpec& spec, const SaturationFunction* sat, const std::vector<cplx>& amps) {
  double total = 0.0;
  for (const auto& a : amps) {
    const double n = std::norm(a);
    if (std::abs(a) < spec.min_modulus) return false;
    if (sat && !sat->differentiable_at(n)) return false;
    total += n;
  }
  return total <= spec.max_total;
}

}  // namespace

std::vector<FieldState> sample_states(const SamplerSpec& spec, const SaturationFunction* saturation,
                                      std::size_t n) {
  if (spec.sites == 0) throw SamplingError("sampler needs at least one site");
  if (!(spec.radius > 0.0) || spec.min_modulus > spec.radius)
    throw SamplingError("sampler disc is empty (radius <= 0 or min_modulus > radius)");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<FieldState> out;
  out.reserve(n);
  std::vector<cplx> amps(spec.sites);
  for (std::size_t p = 0; p < n; ++p) {
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < spec.max_attempts_per_point && !accepted; ++attempt) {
      for (auto& a : amps) {
        const double r = spec.radius * std::sqrt(uni(rng));
        const double phi = 2.0 * std::numbers::pi * uni(rng);
        a = std::polar(r, phi);
      }
      accepted = admissible(spec, saturation, amps);
    }
    if (!accepted) throw SamplingError("no admissible state found; the admissible region may be empty");
    out.emplace_back(amps);
  }
  return out;
}

BracketReport bracket_scan(const ClassicalObservable& F, const ClassicalObservable& G,
                           const SamplerSpec& sampler, std::size_t n_points, BracketConvention conv,
                           unsigned workers) {
  const SaturationFunction* sat =
      (F.statistics() == Statistics::Fermionic || G.statistics() == Statistics::Fermionic)
          ? &F.saturation()
          : nullptr;
  const auto states = sample_states(sampler, sat, n_points);

  BracketReport rep;
  rep.f_label = F.label();
  rep.g_label = G.label();
  rep.samples = states.size();
  rep.values.resize(states.size());

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, n_points))));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) rep.values[i] = poisson_bracket(F, G, states[i], conv);
  };
  if (workers == 1) {
    work(0, states.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (states.size() + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = std::min(states.size(), w * chunk);
      const std::size_t e = std::min(states.size(), b + chunk);
      pool.emplace_back(work, b, e);
    }
  }

  for (std::size_t i = 0; i < rep.values.size(); ++i) {
    const double a = std::abs(rep.values[i]);
    if (a > rep.max_abs || i == 0) {
      rep.max_abs = a;
      rep.argmax_index = i;
    }
  }
  if (!states.empty()) rep.argmax_state = states[rep.argmax_index];
  return rep;
}

void write_bracket_report(std::ostream& out, const BracketReport& r) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "bracket-report 1\n";
  out << "pair " << r.f_label << ' ' << r.g_label << '\n';
  out << "samples " << r.samples << '\n';
  out << "max_abs " << r.max_abs << '\n';
  out << "argmax_index " << r.argmax_index << '\n';
  out << "argmax_state " << r.argmax_state.size();
  for (const auto& a : r.argmax_state.amplitudes()) out << ' ' << a.real() << ' ' << a.imag();
  out << '\n';
  for (std::size_t i = 0; i < r.values.size(); ++i)
    out << "value " << i << ' ' << r.values[i].real() << ' ' << r.values[i].imag() << '\n';
  out << "end\n";
  out.flags(flags);
  out.precision(prec);
}

BracketReport read_bracket_report(std::istream& in) {
  auto bad = [](const std::string& what) { return ValidationError("E_REPORT_SYNTAX", "bracket-report", what); };
  BracketReport r;
  std::string line, key;
  auto next = [&](const char* expect) -> std::istringstream {
    if (!std::getline(in, line)) throw bad(std::string("missing '") + expect + "' line");
    std::istringstream is(line);
    is >> key;
    if (key != expect) throw bad(std::string("expected '") + expect + "', got '" + key + "'");
    return is;
  };
  {
    auto is = next("bracket-report");
    int version = 0;
    if (!(is >> version) || version != 1) throw bad("unsupported version");
  }
  {
    auto is = next("pair");
    is >> r.f_label >> r.g_label;
  }
  next("samples") >> r.samples;
  next("max_abs") >> r.max_abs;
  next("argmax_index") >> r.argmax_index;
  {
    auto is = next("argmax_state");
    std::size_t n = 0;
    is >> n;
    std::vector<cplx> amps(n);
    for (auto& a : amps) {
      double re, im;
      if (!(is >> re >> im)) throw bad("truncated argmax_state");
      a = {re, im};
    }
    r.argmax_state = FieldState(std::move(amps));
  }
  while (std::getline(in, line)) {
    std::istringstream is(line);
    is >> key;
    if (key == "end") return r;
    if (key != "value") throw bad("unexpected line '" + line + "'");
    std::size_t idx;
    double re, im;
    if (!(is >> idx >> re >> im) || idx != r.values.size()) throw bad("malformed value line");
    r.values.emplace_back(re, im);
  }
  throw bad("missing 'end'");
}

// ---------------------------------------------------------------------------
// phase-derivative probe

namespace {

// Central-difference weights for first and second derivatives on {-1, 0, 1}.
constexpr std::array<std::array<double, 3>, 3> kWeights{{
    {0.0, 1.0, 0.0},    // order 0
    {-0.5, 0.0, 0.5},   // order 1
    {1.0, -2.0, 1.0},   // order 2
}};

struct Orders {
  int phi1, phi2, phi3;
};
constexpr std::array<Orders, 4> kProbeOrders{{{1, 1, 1}, {1, 2, 1}, {2, 1, 1}, {2, 2, 1}}};

std::array<double, 4> stencil_derivatives(const ClassicalObservable& H, const ClassicalObservable& Nk,
                                          const std::array<double, 3>& moduli,
                                          const std::array<double, 3>& phases, double h) {
  std::array<double, 27> values{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        std::vector<cplx> amps{std::polar(moduli[0], phases[0] + (a - 1) * h),
                               std::polar(moduli[1], phases[1] + (b - 1) * h),
                               std::polar(moduli[2], phases[2] + (c - 1) * h)};
        values[9 * a + 3 * b + c] = poisson_bracket(H, Nk, FieldState(std::move(amps))).real();
      }

  std::array<double, 4> out{};
  for (std::size_t q = 0; q < kProbeOrders.size(); ++q) {
    const auto& o = kProbeOrders[q];
    double acc = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          acc += kWeights[o.phi1][a] * kWeights[o.phi2][b] * kWeights[o.phi3][c] * values[9 * a + 3 * b + c];
    out[q] = acc / std::pow(h, o.phi1 + o.phi2 + o.phi3);
  }
  return out;
}

}  // namespace

ProbeRecord phase_probe(const ClassicalObservable& H, const ClassicalObservable& Nk, const FieldState& state,
                           double step) {
  if (H.dim() != 3 || Nk.dim() != 3 || state.size() != 3)
    throw ValidationError("E_DIMENSION", "probe", "the phase probe is defined for L = 3");
  if (!(step > 0.0)) throw ValidationError("E_STEP", "probe", "step must be positive");

  std::array<double, 3> moduli{}, phases{};
  for (std::size_t i = 0; i < 3; ++i) {
    moduli[i] = std::abs(state[i]);
    phases[i] = std::arg(state[i]);
    if (moduli[i] == 0.0) throw ValidationError("E_ZERO_AMPLITUDE", "probe", "all |psi_i| must be non-zero");
    if (H.statistics() == Statistics::Fermionic && H.saturation().value(moduli[i] * moduli[i]) == 0.0)
      throw DomainError("probe: saturation function vanishes at the state");
  }

  const auto d1 = stencil_derivatives(H, Nk, moduli, phases, step);
  const auto d2 = stencil_derivatives(H, Nk, moduli, phases, step / 2);
  const auto d4 = stencil_derivatives(H, Nk, moduli, phases, step / 4);

  std::array<double, 4> best{};
  double err = 0.0, scale = 0.0;
  for (std::size_t q = 0; q < 4; ++q) {
    const double r1 = (4.0 * d2[q] - d1[q]) / 3.0;
    const double r2 = (4.0 * d4[q] - d2[q]) / 3.0;
    best[q] = (16.0 * r2 - r1) / 15.0;
    err = std::max(err, std::abs(r2 - r1));
    scale = std::max({scale, std::abs(d1[q]), std::abs(d2[q]), std::abs(d4[q])});
  }
  if (err > 1e-5 * scale) {
    std::ostringstream os;
    os << "phase probe: Richardson levels disagree (" << err << " vs scale " << scale
       << "); adjust the step " << step;
    throw AccuracyError(os.str());
  }

  ProbeRecord rec;
  rec.d3 = best[0];
  rec.d4_22 = best[1];
  rec.d4_11 = best[2];
  rec.d5 = best[3];
  rec.step = step;
  rec.richardson_error = err;

  // With B = -4 Im(t1 + t2) + ..., the mode charges (-2,1,1) and (1,1,-2) give
  //   d3    = -8 Re(t1 + t2),      d4_22 =  8 Im(t1 + t2),
  //   d4_11 = -16 Im t1 + 8 Im t2,  d5    = -16 Re t1 + 8 Re t2.
  const double re1 = -(rec.d5 + rec.d3) / 24.0;
  const double im1 = (rec.d4_22 - rec.d4_11) / 24.0;
  const double re2 = -rec.d3 / 8.0 - re1;
  const double im2 = rec.d4_22 / 8.0 - im1;
  rec.t1 = {re1, im1};
  rec.t2 = {re2, im2};
  return rec;
}

}  // namespace qcl
