#include "qclimit/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "qclimit/errors.hpp"

namespace qcl {

namespace {

struct Line {
  int number;
  std::string text;
};

std::vector<Line> significant_lines(std::istream& in) {
  std::vector<Line> out;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back({number, raw});
  }
  return out;
}

[[noreturn]] void fail(const Line& line, const std::string& code, const std::string& what) {
  throw ValidationError(code, "line " + std::to_string(line.number), what);
}

std::string keyword_value(const Line& line, const std::string& key) {
  std::istringstream is(line.text);
  std::string k, v, extra;
  is >> k >> v;
  if (k != key || v.empty() || (is >> extra)) fail(line, "E_MATRIX_SYNTAX", "expected '" + key + " <value>'");
  return v;
}

}  // namespace

MatrixFile parse_matrix_file(std::istream& in) {
  const auto lines = significant_lines(in);
  if (lines.size() < 4) throw ValidationError("E_MATRIX_SYNTAX", "file", "truncated matrix file");

  {
    std::istringstream is(lines[0].text);
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "qclimit-matrix")
      fail(lines[0], "E_MATRIX_SYNTAX", "missing 'qclimit-matrix <version>' header");
    if (version != 1) fail(lines[0], "E_MATRIX_VERSION", "unsupported format version");
  }

  int L = 0;
  try {
    L = std::stoi(keyword_value(lines[1], "L"));
  } catch (const std::logic_error&) {
    fail(lines[1], "E_MATRIX_SYNTAX", "L must be an integer");
  }
  if (L < 1) fail(lines[1], "E_DIMENSION", "L must be >= 1");

  Statistics stats;
  SaturationFunction sat = SaturationFunction::exponential();
  try {
    stats = statistics_from_name(keyword_value(lines[2], "statistics"));
    sat = saturation_from_name(keyword_value(lines[3], "saturation"));
  } catch (const ValidationError& e) {
    throw ValidationError(e.code(), "header", e.what());
  }

  if (lines.size() != static_cast<std::size_t>(4 + L))
    throw ValidationError("E_MATRIX_SYNTAX", "file",
                          "expected " + std::to_string(L) + " matrix rows, found " +
                              std::to_string(lines.size() - 4));

  CMatrix h(L, L);
  for (int i = 0; i < L; ++i) {
    const Line& line = lines[4 + i];
    std::istringstream is(line.text);
    for (int j = 0; j < L; ++j) {
      double re = 0, im = 0;
      if (!(is >> re >> im)) fail(line, "E_MATRIX_SYNTAX", "row needs " + std::to_string(2 * L) + " numbers");
      h(i, j) = cplx(re, im);
    }
    std::string extra;
    if (is >> extra) fail(line, "E_MATRIX_SYNTAX", "trailing data in row");
  }

  return MatrixFile{HoppingMatrix(std::move(h)), stats, std::move(sat)};
}

MatrixFile read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("E_IO", path, "cannot open matrix file");
  return parse_matrix_file(in);
}

void write_matrix_file(std::ostream& out, const MatrixFile& m) {
  out << "qclimit-matrix 1\n";
  out << "L " << m.h.dim() << "\n";
  out << "statistics " << to_string(m.statistics) << "\n";
  out << "saturation " << m.saturation.name() << "\n";
  out << std::setprecision(17);
  for (int i = 0; i < m.h.dim(); ++i) {
    for (int j = 0; j < m.h.dim(); ++j) {
      if (j) out << "  ";
      out << m.h(i, j).real() << ' ' << m.h(i, j).imag();
    }
    out << "\n";
  }
}

}  // namespace qcl
