#pragma once

// Field CSV: a header comment "# nx ny Lx Ly components", a "# layout ..."
// line, for vector fields a "# mean_gradient a11 a12 a21 a22" line, then one
// comma-separated row per node in row-major order (index j*nx + i).
// Numbers use the shortest round-trip representation, so a write/read cycle
// reproduces every value bitwise.

#include "vkplate/errors.hpp"
#include "vkplate/grid.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace vkplate {

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error(where + ": cannot parse number '" + std::string(s) + "'");
  return x;
}

struct FieldTable {
  Grid grid;
  int components = 0;
  Mat2 affine = Mat2::Zero();
  bool has_affine = false;
  std::vector<Eigen::VectorXd> columns;
};

inline void write_table(std::ostream& os, const Grid& g, const std::vector<const Eigen::VectorXd*>& cols,
                        const Mat2* affine) {
  os << "# " << g.nx << ' ' << g.ny << ' ' << format_double(g.lx) << ' ' << format_double(g.ly) << ' '
     << cols.size() << '\n';
  os << "# layout " << (g.periodic() ? "periodic" : "bounded") << '\n';
  if (affine)
    os << "# mean_gradient " << format_double((*affine)(0, 0)) << ' ' << format_double((*affine)(0, 1)) << ' '
       << format_double((*affine)(1, 0)) << ' ' << format_double((*affine)(1, 1)) << '\n';
  for (int k = 0; k < g.size(); ++k) {
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << format_double((*cols[c])(k));
    os << '\n';
  }
  if (!os) throw std::runtime_error("field csv: write failed");
}

inline FieldTable read_table(std::istream& is, const std::string& source) {
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(source + ":" + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(is, line)) fail("empty field file");
  ++lineno;
  std::istringstream head(line);
  std::string hash;
  int nx = 0, ny = 0, comps = 0;
  std::string lx_s, ly_s;
  if (!(head >> hash >> nx >> ny >> lx_s >> ly_s >> comps) || hash != "#" || comps < 1)
    fail("expected header '# nx ny Lx Ly components'");
  const double lx = parse_double(lx_s, source), ly = parse_double(ly_s, source);

  Layout layout = Layout::periodic;
  Mat2 affine = Mat2::Zero();
  bool has_affine = false;
  std::vector<std::string> rows;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key;
      meta >> key;
      if (key == "layout") {
        std::string val;
        meta >> val;
        if (val == "periodic") layout = Layout::periodic;
        else if (val == "bounded") layout = Layout::bounded;
        else fail("unknown layout '" + val + "'");
      } else if (key == "mean_gradient") {
        std::string a[4];
        if (!(meta >> a[0] >> a[1] >> a[2] >> a[3])) fail("mean_gradient needs four entries");
        affine << parse_double(a[0], source), parse_double(a[1], source), parse_double(a[2], source),
            parse_double(a[3], source);
        has_affine = true;
      }
      continue;
    }
    rows.push_back(line);
  }
  FieldTable t{Grid(lx, ly, nx, ny, layout), comps, affine, has_affine, {}};
  if (static_cast<int>(rows.size()) != t.grid.size())
    throw std::runtime_error(source + ": expected " + std::to_string(t.grid.size()) + " rows, found " +
                             std::to_string(rows.size()));
  t.columns.assign(comps, Eigen::VectorXd(t.grid.size()));
  for (int k = 0; k < t.grid.size(); ++k) {
    std::string_view rest = rows[k];
    for (int c = 0; c < comps; ++c) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (c == comps - 1))
        throw std::runtime_error(source + ": row " + std::to_string(k) + " must have " + std::to_string(comps) +
                                 " entries");
      t.columns[c](k) = parse_double(rest.substr(0, comma), source + ": row " + std::to_string(k));
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
  }
  return t;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return is;
}

} // namespace detail

inline void write_field(std::ostream& os, const ScalarField& f) { detail::write_table(os, f.grid, {&f.values}, nullptr); }

inline void write_field(std::ostream& os, const VectorField2& w) {
  const Eigen::VectorXd a = w.first(), b = w.second();
  detail::write_table(os, w.grid, {&a, &b}, &w.affine);
}

/// Several scalar fields on one grid as columns of a single table.
inline void write_fields(std::ostream& os, const std::vector<const ScalarField*>& fields) {
  if (fields.empty()) throw std::invalid_argument("write_fields: nothing to write");
  std::vector<const Eigen::VectorXd*> cols;
  for (const auto* f : fields) {
    require_same_grid(fields.front()->grid, f->grid, "write_fields");
    cols.push_back(&f->values);
  }
  detail::write_table(os, fields.front()->grid, cols, nullptr);
}

inline ScalarField read_scalar_field(std::istream& is, const std::string& source = "field") {
  auto t = detail::read_table(is, source);
  if (t.components != 1) throw std::runtime_error(source + ": expected a scalar field");
  return ScalarField(t.grid, std::move(t.columns[0]));
}

inline VectorField2 read_vector_field(std::istream& is, const std::string& source = "field") {
  auto t = detail::read_table(is, source);
  if (t.components != 2) throw std::runtime_error(source + ": expected a two-component field");
  Eigen::VectorXd v(2 * t.grid.size());
  v << t.columns[0], t.columns[1];
  return VectorField2(t.grid, std::move(v), t.affine);
}

inline void save_field(const std::string& path, const ScalarField& f) {
  auto os = detail::open_out(path);
  write_field(os, f);
}

inline void save_field(const std::string& path, const VectorField2& w) {
  auto os = detail::open_out(path);
  write_field(os, w);
}

inline ScalarField load_scalar_field(const std::string& path) {
  auto is = detail::open_in(path);
  return read_scalar_field(is, path);
}

inline VectorField2 load_vector_field(const std::string& path) {
  auto is = detail::open_in(path);
  return read_vector_field(is, path);
}

} // namespace vkplate
