#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "qclimit/hamiltonian.hpp"

namespace qcl {

/// {F, G} = scale * sum_k (dF/dpsi_k dG/dpsi_k^* - dF/dpsi_k^* dG/dpsi_k).
///
/// The default scale -i makes psi_k' = {psi_k, H} = -i dH/dpsi_k^*, and
/// gives real brackets for real observables.
struct BracketConvention {
  cplx scale{0.0, -1.0};
};

/// Bracket "vanishes" below this (|J|, eps of order one).
inline constexpr double kVanishThreshold = 1e-9;
/// Bracket "does not vanish" when it exceeds this somewhere.
inline constexpr double kViolationThreshold = 1e-3;

cplx poisson_bracket(const WirtingerGradient& dF, const WirtingerGradient& dG,
                     BracketConvention conv = {});

cplx poisson_bracket(const ClassicalObservable& F, const ClassicalObservable& G,
                     const FieldState& state, BracketConvention conv = {});

/// Random states for bracket scans. Each amplitude is drawn uniformly from
/// the disc |psi_i| <= radius; draws outside the admissible region are
/// rejected. Admissible means: every |psi_i| >= min_modulus, the total
/// occupation is <= max_total, and (for fermionic observables) every
/// occupation lies in the interior of the saturation domain.
struct SamplerSpec {
  std::size_t sites = 0;
  double radius = 1.0;
  double min_modulus = 0.0;
  double max_total = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
  std::size_t max_attempts_per_point = 10000;
};

/// Pre-generates n admissible states. Deterministic in `spec.seed`.
/// Throws SamplingError if the admissible region looks empty.
std::vector<FieldState> sample_states(const SamplerSpec& spec, const SaturationFunction* saturation,
                                      std::size_t n);

struct BracketReport {
  std::string f_label;
  std::string g_label;
  std::size_t samples = 0;
  double max_abs = 0.0;
  std::size_t argmax_index = 0;
  FieldState argmax_state;
  std::vector<cplx> values;
};

/// Brackets at n_points sampled states. Workers split the pre-generated
/// sample list, so the report does not depend on the worker count.
BracketReport bracket_scan(const ClassicalObservable& F, const ClassicalObservable& G,
                           const SamplerSpec& sampler, std::size_t n_points,
                           BracketConvention conv = {}, unsigned workers = 1);

/// Line-oriented text record (docs/formats.md).
void write_bracket_report(std::ostream& out, const BracketReport& r);
BracketReport read_bracket_report(std::istream& in);

/// Phase-derivative probe of {H, N_k} for L = 3.
///
/// At fixed moduli the bracket is a trigonometric polynomial in the phases
/// Phi_1..3. The mixed derivatives d^3/dPhi1 dPhi3 dPhi2,
/// d^4/dPhi1 dPhi3 dPhi2^2, d^4/dPhi1^2 dPhi3 dPhi2 and
/// d^5/dPhi1^2 dPhi3 dPhi2^2 only see the phase modes (-2,1,1) and (1,1,-2)
/// (plus conjugates). Solving the four resulting real equations recovers the
/// complex mode amplitudes
///
///   t1 ~ psi_1^*2 psi_2 psi_3   and   t2 ~ psi_1 psi_2 psi_3^*2,
///
/// normalised so that {H, N_k} = -4 Im(t1 + t2) + (modes with a zero charge).
/// For the nearest-neighbour chain t1 = J u_1k conj(u_3k) psi_1^*2 psi_3 psi_2
/// f^2(|psi_1|^2) f(|psi_3|^2) f(|psi_2|^2).
struct ProbeRecord {
  double d3 = 0.0;    ///< d^3 / dPhi1 dPhi3 dPhi2
  double d4_22 = 0.0; ///< d^4 / dPhi1 dPhi3 dPhi2^2
  double d4_11 = 0.0; ///< d^4 / dPhi1^2 dPhi3 dPhi2
  double d5 = 0.0;    ///< d^5 / dPhi1^2 dPhi3 dPhi2^2
  cplx t1;
  cplx t2;
  double step = 0.0;
  double richardson_error = 0.0;  ///< estimated absolute error of the derivatives
};

/// Central differences over a 3x3x3 phase stencil at steps h, h/2, h/4,
/// combined by two rounds of Richardson extrapolation. Throws AccuracyError
/// when the two extrapolation levels disagree by more than 1e-5 relative to
/// the derivative scale (step too large or too small), ValidationError when
/// L != 3 or some |psi_i| = 0, and DomainError when f vanishes at the state.
ProbeRecord phase_probe(const ClassicalObservable& H, const ClassicalObservable& Nk,
                           const FieldState& state, double step = 0.1);

}  // namespace qcl
