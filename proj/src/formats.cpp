#include "qclimit/formats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qclimit/errors.hpp"

namespace qcl {

namespace {

ValidationError csv_error(const std::string& what, std::size_t line) {
  std::ostringstream os;
  os << "line " << line << ": " << what;
  return ValidationError("E_CSV", "csv", os.str());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw csv_error("bad number '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw csv_error("bad number '" + s + "'", line);
  }
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
    throw csv_error("bad index '" + s + "'", line);
  return std::stoull(s);
}

// Reads the header, then calls row(cells, line_number) for every data line.
template <typename Row>
void read_csv(std::istream& in, const std::string& header, std::size_t columns, Row row) {
  std::string line;
  if (!std::getline(in, line) || line != header) throw csv_error("expected header '" + header + "'", 1);
  std::size_t ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != columns) throw csv_error("wrong number of columns", ln);
    row(cells, ln);
  }
}

struct PrecisionGuard {
  std::ostream& os;
  std::streamsize prec;
  std::ios::fmtflags flags;
  explicit PrecisionGuard(std::ostream& o) : os(o), prec(o.precision()), flags(o.flags()) {
    os << std::defaultfloat << std::setprecision(17);
  }
  ~PrecisionGuard() {
    os.precision(prec);
    os.flags(flags);
  }
};

void write_number(std::ostream& out, double v) {
  if (std::isnan(v)) out << "nan";
  else out << v;
}

}  // namespace

// ---------------------------------------------------------------------------

void write_section_csv(std::ostream& out, const std::vector<SectionRecord>& records) {
  PrecisionGuard g(out);
  out << "trajectory_id,t,p,q,energy\n";
  for (const auto& r : records)
    out << r.trajectory_id << ',' << r.t << ',' << r.p << ',' << r.q << ',' << r.energy << '\n';
}

std::vector<SectionRecord> read_section_csv(std::istream& in) {
  std::vector<SectionRecord> out;
  read_csv(in, "trajectory_id,t,p,q,energy", 5, [&](const std::vector<std::string>& c, std::size_t ln) {
    SectionRecord r;
    r.trajectory_id = parse_index(c[0], ln);
    r.t = parse_double(c[1], ln);
    r.p = parse_double(c[2], ln);
    r.q = parse_double(c[3], ln);
    r.energy = parse_double(c[4], ln);
    out.push_back(r);
  });
  return out;
}

void write_section_jsonl(std::ostream& out, const std::vector<SectionRecord>& records) {
  for (const auto& r : records) {
    nlohmann::json j;
    j["trajectory_id"] = r.trajectory_id;
    j["t"] = r.t;
    j["p"] = r.p;
    j["q"] = r.q;
    j["energy"] = r.energy;
    j["state"] = r.state;
    j["direction"] = r.direction;
    out << j.dump() << '\n';
  }
}

std::vector<SectionRecord> read_section_jsonl(std::istream& in) {
  std::vector<SectionRecord> out;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SectionRecord r;
      r.trajectory_id = j.at("trajectory_id").get<std::size_t>();
      r.t = j.at("t").get<double>();
      r.p = j.at("p").get<double>();
      r.q = j.at("q").get<double>();
      r.energy = j.at("energy").get<double>();
      r.state = j.at("state").get<Vec4>();
      r.direction = j.at("direction").get<int>();
      out.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      std::ostringstream os;
      os << "line " << ln << ": " << e.what();
      throw ValidationError("E_JSONL", "jsonl", os.str());
    }
  }
  return out;
}

void write_section_svg(std::ostream& out, const std::vector<SectionRecord>& records, const std::string& p_label,
                       const std::string& q_label) {
  static constexpr const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double W = 640, Hpx = 640, margin = 48;
  double pmin = 0, pmax = 1, qmin = 0, qmax = 1;
  if (!records.empty()) {
    pmin = pmax = records.front().p;
    qmin = qmax = records.front().q;
    for (const auto& r : records) {
      pmin = std::min(pmin, r.p);
      pmax = std::max(pmax, r.p);
      qmin = std::min(qmin, r.q);
      qmax = std::max(qmax, r.q);
    }
  }
  if (pmax - pmin < 1e-12) pmax = pmin + 1.0;
  if (qmax - qmin < 1e-12) qmax = qmin + 1.0;
  auto X = [&](double p) { return margin + (p - pmin) / (pmax - pmin) * (W - 2 * margin); };
  auto Y = [&](double q) { return Hpx - margin - (q - qmin) / (qmax - qmin) * (Hpx - 2 * margin); };

  std::ostringstream body;
  body << std::fixed << std::setprecision(2);
  for (const auto& r : records)
    body << "<circle cx=\"" << X(r.p) << "\" cy=\"" << Y(r.q) << "\" r=\"1.2\" fill=\"" << palette[r.trajectory_id % 10]
         << "\"/>\n";

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hpx << "\" viewBox=\"0 0 "
      << W << ' ' << Hpx << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << W - 2 * margin << "\" height=\""
      << Hpx - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << Hpx - 12 << "\" text-anchor=\"middle\" font-size=\"14\">" << p_label
      << "</text>\n";
  out << "<text x=\"14\" y=\"" << Hpx / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 14 "
      << Hpx / 2 << ")\">" << q_label << "</text>\n";
  out << body.str();
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------

void write_classifications_csv(std::ostream& out, const std::vector<ClassificationRow>& rows) {
  PrecisionGuard g(out);
  out << "trajectory_id,records,dimension,lyapunov,shape\n";
  for (const auto& r : rows) {
    out << r.cls.trajectory_id << ',' << r.cls.records << ',';
    write_number(out, r.cls.dimension);
    out << ',';
    if (r.has_lyapunov) write_number(out, r.lyapunov);
    out << ',' << to_string(r.cls.shape) << '\n';
  }
}

std::vector<ClassificationRow> read_classifications_csv(std::istream& in) {
  std::vector<ClassificationRow> out;
  read_csv(in, "trajectory_id,records,dimension,lyapunov,shape", 5,
           [&](const std::vector<std::string>& c, std::size_t ln) {
             ClassificationRow r;
             r.cls.trajectory_id = parse_index(c[0], ln);
             r.cls.records = parse_index(c[1], ln);
             r.cls.dimension = parse_double(c[2], ln);
             r.has_lyapunov = !c[3].empty();
             if (r.has_lyapunov) r.lyapunov = parse_double(c[3], ln);
             if (c[4] == "curve-like") r.cls.shape = Shape::CurveLike;
             else if (c[4] == "area-like") r.cls.shape = Shape::AreaLike;
             else if (c[4] == "ambiguous") r.cls.shape = Shape::Ambiguous;
             else throw csv_error("unknown shape '" + c[4] + "'", ln);
             out.push_back(r);
           });
  return out;
}

void write_lyapunov_csv(std::ostream& out, const std::vector<LyapunovRow>& rows) {
  PrecisionGuard g(out);
  out << "trajectory_id,t,estimate\n";
  for (const auto& r : rows) out << r.trajectory_id << ',' << r.t << ',' << r.estimate << '\n';
}

std::vector<LyapunovRow> read_lyapunov_csv(std::istream& in) {
  std::vector<LyapunovRow> out;
  read_csv(in, "trajectory_id,t,estimate", 3, [&](const std::vector<std::string>& c, std::size_t ln) {
    out.push_back({parse_index(c[0], ln), parse_double(c[1], ln), parse_double(c[2], ln)});
  });
  return out;
}

void write_shell_csv(std::ostream& out, const std::vector<ShellPoint>& points, const std::array<Coord, 3>& coords) {
  PrecisionGuard g(out);
  out << to_string(coords[0]) << ',' << to_string(coords[1]) << ',' << to_string(coords[2])
      << ",H,in_band,sign_change\n";
  for (const auto& p : points)
    out << p.coords[0] << ',' << p.coords[1] << ',' << p.coords[2] << ',' << p.H << ',' << (p.in_band ? 1 : 0) << ','
        << static_cast<int>(p.sign_change) << '\n';
}

std::vector<ShellPoint> read_shell_csv(std::istream& in, std::array<Coord, 3>* coords) {
  std::string header;
  if (!std::getline(in, header)) throw csv_error("missing header", 1);
  const auto h = split(header);
  if (h.size() != 6 || h[3] != "H" || h[4] != "in_band" || h[5] != "sign_change")
    throw csv_error("unexpected header '" + header + "'", 1);
  std::array<Coord, 3> cs{};
  for (std::size_t i = 0; i < 3; ++i) cs[i] = coord_from_name(h[i]);
  if (coords) *coords = cs;

  std::vector<ShellPoint> out;
  std::string line;
  std::size_t ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 6) throw csv_error("wrong number of columns", ln);
    ShellPoint p;
    for (std::size_t i = 0; i < 3; ++i) p.coords[i] = parse_double(c[i], ln);
    p.H = parse_double(c[3], ln);
    if (c[4] != "0" && c[4] != "1") throw csv_error("in_band must be 0 or 1", ln);
    p.in_band = c[4] == "1";
    const auto mask = parse_index(c[5], ln);
    if (mask > 7) throw csv_error("sign_change must be in 0..7", ln);
    p.sign_change = static_cast<std::uint8_t>(mask);
    out.push_back(p);
  }
  return out;
}

}  // namespace qcl
