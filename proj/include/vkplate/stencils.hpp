#pragma once

// Second-order finite-difference operators on a Grid, as sparse matrices.
// Periodic grids wrap; bounded grids switch to one-sided second-order
// stencils on the edge nodes.

#include "vkplate/grid.hpp"

#include <Eigen/Sparse>

#include <utility>
#include <vector>

namespace vkplate {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

namespace detail {

using Stencil1d = std::vector<std::pair<int, double>>;

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

inline Stencil1d first_derivative_1d(int i, int n, double h, bool periodic) {
  if (periodic) return {{wrap(i - 1, n), -0.5 / h}, {wrap(i + 1, n), 0.5 / h}};
  if (i == 0) return {{0, -1.5 / h}, {1, 2.0 / h}, {2, -0.5 / h}};
  if (i == n - 1) return {{n - 1, 1.5 / h}, {n - 2, -2.0 / h}, {n - 3, 0.5 / h}};
  return {{i - 1, -0.5 / h}, {i + 1, 0.5 / h}};
}

inline Stencil1d second_derivative_1d(int i, int n, double h, bool periodic) {
  const double s = 1.0 / (h * h);
  if (periodic) return {{wrap(i - 1, n), s}, {i, -2.0 * s}, {wrap(i + 1, n), s}};
  if (i == 0) return {{0, 2.0 * s}, {1, -5.0 * s}, {2, 4.0 * s}, {3, -s}};
  if (i == n - 1) return {{n - 1, 2.0 * s}, {n - 2, -5.0 * s}, {n - 3, 4.0 * s}, {n - 4, -s}};
  return {{i - 1, s}, {i, -2.0 * s}, {i + 1, s}};
}

template <class Rule>
SpMat along_x(const Grid& g, Rule rule) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      for (auto [col, c] : rule(i, g.nx, g.hx(), g.periodic()))
        t.emplace_back(g.index(i, j), g.index(col, j), c);
  SpMat m(g.size(), g.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

template <class Rule>
SpMat along_y(const Grid& g, Rule rule) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      for (auto [row, c] : rule(j, g.ny, g.hy(), g.periodic()))
        t.emplace_back(g.index(i, j), g.index(i, row), c);
  SpMat m(g.size(), g.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

} // namespace detail

/// Gradient and Hessian operators on nodal values. dxy = dx * dy.
struct Stencils {
  SpMat dx, dy, dxx, dyy, dxy;

  explicit Stencils(const Grid& g)
      : dx(detail::along_x(g, detail::first_derivative_1d)),
        dy(detail::along_y(g, detail::first_derivative_1d)),
        dxx(detail::along_x(g, detail::second_derivative_1d)),
        dyy(detail::along_y(g, detail::second_derivative_1d)) {
    dxy = dx * dy;
  }
};

} // namespace vkplate
