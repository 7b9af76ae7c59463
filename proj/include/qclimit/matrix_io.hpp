#pragma once

#include <iosfwd>
#include <string>

#include "qclimit/hamiltonian.hpp"

namespace qcl {

/// Contents of a matrix input file (see docs/formats.md):
///
///     qclimit-matrix 1
///     L 2
///     statistics fermionic
///     saturation exp
///     0 0   1 0
///     1 0   0 0
///
/// Rows are row-major, each entry a (re, im) pair. `#` starts a comment.
struct MatrixFile {
  HoppingMatrix h;
  Statistics statistics;
  SaturationFunction saturation;
};

/// Throws ValidationError with a line number in the message.
MatrixFile parse_matrix_file(std::istream& in);
MatrixFile read_matrix_file(const std::string& path);
void write_matrix_file(std::ostream& out, const MatrixFile& m);

}  // namespace qcl
