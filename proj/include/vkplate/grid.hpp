#pragma once

// Uniform rectangular grids and nodal fields.

#include "vkplate/errors.hpp"
#include "vkplate/tensor_forms.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace vkplate {

enum class Layout {
  periodic, // nodes x_i = i*h, i < n, h = L/n; node n coincides with node 0
  bounded   // nodes x_i = i*h, i < n, h = L/(n-1); both edges carry nodes
};

struct Grid {
  double lx = 1.0;
  double ly = 1.0;
  int nx = 0;
  int ny = 0;
  Layout layout = Layout::periodic;

  Grid() = default;
  Grid(double lx_, double ly_, int nx_, int ny_, Layout layout_)
      : lx(lx_), ly(ly_), nx(nx_), ny(ny_), layout(layout_) {
    if (nx < 4 || ny < 4) throw std::invalid_argument("Grid: need at least 4 nodes per direction");
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
      throw std::invalid_argument("Grid: lengths must be positive");
  }

  bool periodic() const { return layout == Layout::periodic; }
  int size() const { return nx * ny; }
  double hx() const { return periodic() ? lx / nx : lx / (nx - 1); }
  double hy() const { return periodic() ? ly / ny : ly / (ny - 1); }
  double x(int i) const { return i * hx(); }
  double y(int j) const { return j * hy(); }
  int index(int i, int j) const { return j * nx + i; }
  double area() const { return lx * ly; }

  /// Trapezoid weights on bounded grids; plain cell area on periodic ones.
  Eigen::VectorXd weights() const {
    Eigen::VectorXd w(size());
    const double cell = hx() * hy();
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        double wx = 1.0, wy = 1.0;
        if (!periodic()) {
          if (i == 0 || i == nx - 1) wx = 0.5;
          if (j == 0 || j == ny - 1) wy = 0.5;
        }
        w(index(i, j)) = cell * wx * wy;
      }
    }
    return w;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.lx == b.lx && a.ly == b.ly && a.nx == b.nx && a.ny == b.ny && a.layout == b.layout;
  }

  std::string describe() const {
    std::ostringstream os;
    os << nx << "x" << ny << (periodic() ? " periodic" : " bounded") << " on " << lx << "x" << ly;
    return os.str();
  }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) throw GridMismatch(std::string(where) + ": " + a.describe() + " vs " + b.describe());
}

/// Nodal scalar field, row-major (index = j*nx + i).
struct ScalarField {
  Grid grid;
  Eigen::VectorXd values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g) : grid(g), values(Eigen::VectorXd::Zero(g.size())) {}
  ScalarField(const Grid& g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
    if (values.size() != g.size()) throw GridMismatch("ScalarField: value count does not match grid");
  }

  template <class F>
  static ScalarField sample(const Grid& g, F&& fn) {
    ScalarField s(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) s.values(g.index(i, j)) = fn(g.x(i), g.y(j));
    return s;
  }

  double operator()(int i, int j) const { return values(grid.index(i, j)); }
};

/// In-plane displacement. `affine` is a symmetric mean displacement gradient
/// on periodic grids (w = affine * (x, y) + periodic part); it stays zero on
/// bounded grids, where nodal values represent affine fields directly.
struct VectorField2 {
  Grid grid;
  Eigen::VectorXd values; // [first component; second component], 2*n
  Mat2 affine = Mat2::Zero();

  VectorField2() = default;
  explicit VectorField2(const Grid& g) : grid(g), values(Eigen::VectorXd::Zero(2 * g.size())) {}
  VectorField2(const Grid& g, Eigen::VectorXd v, const Mat2& a = Mat2::Zero())
      : grid(g), values(std::move(v)), affine(a) {
    if (values.size() != 2 * g.size()) throw GridMismatch("VectorField2: value count does not match grid");
  }

  auto first() { return values.head(grid.size()); }
  auto second() { return values.tail(grid.size()); }
  auto first() const { return values.head(grid.size()); }
  auto second() const { return values.tail(grid.size()); }

  template <class F>
  static VectorField2 sample(const Grid& g, F&& fn) {
    VectorField2 w(g);
    const int n = g.size();
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const Vec2 p = fn(g.x(i), g.y(j));
        w.values(g.index(i, j)) = p(0);
        w.values(n + g.index(i, j)) = p(1);
      }
    return w;
  }
};

/// Symmetric 2x2 tensor per node: xx, yy, xy components.
struct SymTensorField2 {
  Grid grid;
  Eigen::VectorXd xx, yy, xy;

  SymTensorField2() = default;
  explicit SymTensorField2(const Grid& g)
      : grid(g), xx(Eigen::VectorXd::Zero(g.size())), yy(Eigen::VectorXd::Zero(g.size())),
        xy(Eigen::VectorXd::Zero(g.size())) {}

  Mat2 at(int k) const {
    Mat2 m;
    m << xx(k), xy(k), xy(k), yy(k);
    return m;
  }
  void set(int k, const Mat2& m) {
    xx(k) = m(0, 0);
    yy(k) = m(1, 1);
    xy(k) = 0.5 * (m(0, 1) + m(1, 0));
  }
};

/// Quadrature-weighted integral of nodal values.
inline double integrate(const Grid& g, const Eigen::VectorXd& values) {
  return g.weights().dot(values);
}

inline double mean(const Grid& g, const Eigen::VectorXd& values) {
  return integrate(g, values) / g.weights().sum();
}

/// Discrete L2 norm sqrt(sum_k q_k v_k^2).
inline double l2_norm(const Grid& g, const Eigen::VectorXd& values) {
  return std::sqrt(g.weights().dot(values.cwiseAbs2()));
}

inline double l2_norm(const ScalarField& s) { return l2_norm(s.grid, s.values); }

} // namespace vkplate
