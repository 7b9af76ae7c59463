#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qclimit/dynamics.hpp"
#include "qclimit/poincare.hpp"

namespace qcl {

// Section records ------------------------------------------------------------

/// CSV, header `trajectory_id,t,p,q,energy`, 17 significant digits.
void write_section_csv(std::ostream& out, const std::vector<SectionRecord>& records);
/// Only the CSV columns are restored; `state` and `direction` stay default.
std::vector<SectionRecord> read_section_csv(std::istream& in);

/// One JSON object per line with keys trajectory_id, t, p, q, energy,
/// state (array of 4) and direction.
void write_section_jsonl(std::ostream& out, const std::vector<SectionRecord>& records);
std::vector<SectionRecord> read_section_jsonl(std::istream& in);

/// Scatter plot of (p, q), one colour per trajectory.
void write_section_svg(std::ostream& out, const std::vector<SectionRecord>& records, const std::string& p_label,
                       const std::string& q_label);

// Classifications ------------------------------------------------------------

/// CSV, header `trajectory_id,records,dimension,lyapunov,shape`; an empty
/// lyapunov cell means it was not computed, `nan` marks a missing dimension.
struct ClassificationRow {
  TrajectoryClass cls;
  double lyapunov = 0.0;
  bool has_lyapunov = false;
};
void write_classifications_csv(std::ostream& out, const std::vector<ClassificationRow>& rows);
std::vector<ClassificationRow> read_classifications_csv(std::istream& in);

// Lyapunov -------------------------------------------------------------------

/// CSV, header `trajectory_id,t,estimate`; one row per renormalisation.
struct LyapunovRow {
  std::size_t trajectory_id = 0;
  double t = 0.0;
  double estimate = 0.0;
};
void write_lyapunov_csv(std::ostream& out, const std::vector<LyapunovRow>& rows);
std::vector<LyapunovRow> read_lyapunov_csv(std::istream& in);

// Energy shell slice ---------------------------------------------------------

/// CSV, header `<c1>,<c2>,<c3>,H,in_band,sign_change` where c1..c3 are the
/// names of the free coordinates.
void write_shell_csv(std::ostream& out, const std::vector<ShellPoint>& points, const std::array<Coord, 3>& coords);
std::vector<ShellPoint> read_shell_csv(std::istream& in, std::array<Coord, 3>* coords = nullptr);

}  // namespace qcl
