#pragma once

// Discrete von Karman plate energy
//   I(w, v) = 1/2 int Q2in(sym grad w + 1/2 grad v x grad v) + 1/24 int Q2in(grad^2 v)
//   J(w, v) = I(w, v) - r33 int f v
// on a uniform grid, with its exact discrete gradient.

#include "vkplate/grid.hpp"
#include "vkplate/linalg.hpp"
#include "vkplate/stencils.hpp"
#include "vkplate/tensor_forms.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace vkplate {

enum class PlateBc { periodic, free };

/// Grid, reduced material, zero-mean load and the rotation entry r33.
/// Periodic grids give a periodic cell; bounded grids a free plate whose
/// gauge (mean and tilt of v, rigid motions of w) is fixed by projection.
class PlateProblem {
public:
  PlateProblem(const Grid& grid, const LinOp2& material, const ScalarField& force, double r33)
      : grid_(grid), material_(material), force_(force), r33_(r33),
        ops_(std::make_shared<const Stencils>(grid)), weights_(grid.weights()) {
    require_same_grid(grid, force.grid, "PlateProblem force");
    if (!std::isfinite(r33) || std::abs(r33) > 1.0)
      throw std::invalid_argument("PlateProblem: |r33| must not exceed 1");
    if (!force.values.allFinite()) throw std::invalid_argument("PlateProblem: non-finite force");
    normalize_load();
    build_gauge();
  }

  PlateProblem(const Grid& grid, const QuadForm3& q3, const ScalarField& force, double r33)
      : PlateProblem(grid, l2in_matrix(q3), force, r33) {}

  const Grid& grid() const { return grid_; }
  const LinOp2& material() const { return material_; }
  const ScalarField& force() const { return force_; }
  double r33() const { return r33_; }
  PlateBc bc() const { return grid_.periodic() ? PlateBc::periodic : PlateBc::free; }
  const Stencils& ops() const { return *ops_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const NullSpace& v_gauge() const { return v_gauge_; }
  const NullSpace& w_gauge() const { return w_gauge_; }
  /// Mean subtracted from the input force.
  double load_shift() const { return load_shift_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

private:
  void normalize_load() {
    const double input_norm = force_.values.norm();
    load_shift_ = mean(grid_, force_.values);
    force_.values.array() -= load_shift_;
    if (std::abs(load_shift_) * std::sqrt(grid_.size()) > 1e-12 * input_norm) {
      std::ostringstream os;
      os << "force was shifted by " << -load_shift_ << " to enforce zero mean";
      warnings_.push_back(os.str());
    }
  }

  void build_gauge() {
    const int n = grid_.size();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd q2(2 * n);
    q2 << weights_, weights_;
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(2 * n), e2 = Eigen::VectorXd::Zero(2 * n);
    e1.head(n) = ones;
    e2.tail(n) = ones;
    if (grid_.periodic()) {
      v_gauge_ = NullSpace({ones}, weights_);
      w_gauge_ = NullSpace({e1, e2}, q2);
      return;
    }
    Eigen::VectorXd xs(n), ys(n);
    for (int j = 0; j < grid_.ny; ++j)
      for (int i = 0; i < grid_.nx; ++i) {
        xs(grid_.index(i, j)) = grid_.x(i) - 0.5 * grid_.lx;
        ys(grid_.index(i, j)) = grid_.y(j) - 0.5 * grid_.ly;
      }
    Eigen::VectorXd rot(2 * n);
    rot << -ys, xs;
    v_gauge_ = NullSpace({ones, xs, ys}, weights_);
    w_gauge_ = NullSpace({e1, e2, rot}, q2);
  }

  Grid grid_;
  LinOp2 material_;
  ScalarField force_;
  double r33_;
  std::shared_ptr<const Stencils> ops_;
  Eigen::VectorXd weights_;
  NullSpace v_gauge_, w_gauge_;
  double load_shift_ = 0.0;
  std::vector<std::string> warnings_;
};

namespace detail {

/// Node-wise L applied to a symmetric tensor field.
inline SymTensorField2 apply_nodewise(const LinOp2& l, const SymTensorField2& e) {
  const Mat3& k = l.matrix();
  SymTensorField2 s(e.grid);
  const Eigen::VectorXd c3 = kSqrt2 * e.xy;
  s.xx = k(0, 0) * e.xx + k(0, 1) * e.yy + k(0, 2) * c3;
  s.yy = k(1, 0) * e.xx + k(1, 1) * e.yy + k(1, 2) * c3;
  s.xy = (k(2, 0) * e.xx + k(2, 1) * e.yy + k(2, 2) * c3) / kSqrt2;
  return s;
}

/// Node-wise Frobenius product.
inline Eigen::VectorXd contract(const SymTensorField2& a, const SymTensorField2& b) {
  return a.xx.cwiseProduct(b.xx) + a.yy.cwiseProduct(b.yy) + 2.0 * a.xy.cwiseProduct(b.xy);
}

inline SymTensorField2 membrane_strain(const Stencils& d, const VectorField2& w, const ScalarField& v) {
  const int n = v.grid.size();
  const Eigen::VectorXd gx = d.dx * v.values, gy = d.dy * v.values;
  SymTensorField2 e(v.grid);
  e.xx = d.dx * w.values.head(n) + 0.5 * gx.cwiseAbs2();
  e.yy = d.dy * w.values.tail(n) + 0.5 * gy.cwiseAbs2();
  e.xy = 0.5 * (d.dy * w.values.head(n) + d.dx * w.values.tail(n)) + 0.5 * gx.cwiseProduct(gy);
  const Mat2 a = sym(w.affine);
  e.xx.array() += a(0, 0);
  e.yy.array() += a(1, 1);
  e.xy.array() += a(0, 1);
  return e;
}

inline SymTensorField2 bending_strain(const Stencils& d, const ScalarField& v) {
  SymTensorField2 h(v.grid);
  h.xx = d.dxx * v.values;
  h.yy = d.dyy * v.values;
  h.xy = d.dxy * v.values;
  return h;
}

} // namespace detail

/// sym grad w + 1/2 grad v x grad v, node-wise.
inline SymTensorField2 membrane_strain(const VectorField2& w, const ScalarField& v, const Grid& grid) {
  require_same_grid(w.grid, grid, "membrane_strain(w)");
  require_same_grid(v.grid, grid, "membrane_strain(v)");
  return detail::membrane_strain(Stencils(grid), w, v);
}

/// Discrete Hessian of v, node-wise.
inline SymTensorField2 bending_strain(const ScalarField& v, const Grid& grid) {
  require_same_grid(v.grid, grid, "bending_strain");
  return detail::bending_strain(Stencils(grid), v);
}

struct EnergyBreakdown {
  double membrane = 0.0;
  double bending = 0.0;
  double load = 0.0;
  double total = 0.0;
};

inline void check_fields(const PlateProblem& p, const VectorField2& w, const ScalarField& v) {
  require_same_grid(w.grid, p.grid(), "plate field w");
  require_same_grid(v.grid, p.grid(), "plate field v");
}

inline EnergyBreakdown energy(const PlateProblem& p, const VectorField2& w, const ScalarField& v) {
  check_fields(p, w, v);
  const auto& q = p.weights();
  const auto e = detail::membrane_strain(p.ops(), w, v);
  const auto h = detail::bending_strain(p.ops(), v);
  EnergyBreakdown out;
  out.membrane = 0.5 * q.dot(detail::contract(detail::apply_nodewise(p.material(), e), e));
  out.bending = q.dot(detail::contract(detail::apply_nodewise(p.material(), h), h)) / 24.0;
  out.load = p.r33() * q.dot(p.force().values.cwiseProduct(v.values));
  out.total = out.membrane + out.bending - out.load;
  return out;
}

/// J(w1, v1) - J(w0, v0), evaluated from differences of the strains so that
/// small changes are not lost to cancellation.
inline double energy_change(const PlateProblem& p, const VectorField2& w0, const ScalarField& v0,
                            const VectorField2& w1, const ScalarField& v1) {
  check_fields(p, w0, v0);
  check_fields(p, w1, v1);
  const auto& d = p.ops();
  const auto& q = p.weights();
  const int n = p.grid().size();
  const Eigen::VectorXd g0x = d.dx * v0.values, g0y = d.dy * v0.values;
  const Eigen::VectorXd g1x = d.dx * v1.values, g1y = d.dy * v1.values;
  const Eigen::VectorXd dgx = d.dx * (v1.values - v0.values), dgy = d.dy * (v1.values - v0.values);
  const Eigen::VectorXd sgx = g1x + g0x, sgy = g1y + g0y;
  const Eigen::VectorXd dw = w1.values - w0.values;
  const Mat2 da = sym(Mat2(w1.affine - w0.affine));

  // e1 - e0; (a x a - b x b) = sym((a - b) x (a + b))
  SymTensorField2 de(p.grid());
  de.xx = d.dx * dw.head(n) + 0.5 * dgx.cwiseProduct(sgx);
  de.yy = d.dy * dw.tail(n) + 0.5 * dgy.cwiseProduct(sgy);
  de.xy = 0.5 * (d.dy * dw.head(n) + d.dx * dw.tail(n)) +
          0.25 * (dgx.cwiseProduct(sgy) + dgy.cwiseProduct(sgx));
  de.xx.array() += da(0, 0);
  de.yy.array() += da(1, 1);
  de.xy.array() += da(0, 1);

  auto se = detail::membrane_strain(d, w0, v0);
  const auto e1 = detail::membrane_strain(d, w1, v1);
  se.xx += e1.xx;
  se.yy += e1.yy;
  se.xy += e1.xy;

  const ScalarField dv(p.grid(), v1.values - v0.values);
  auto sh = detail::bending_strain(d, v0);
  const auto h1 = detail::bending_strain(d, v1);
  sh.xx += h1.xx;
  sh.yy += h1.yy;
  sh.xy += h1.xy;
  const auto dh = detail::bending_strain(d, dv);

  const double membrane = 0.5 * q.dot(detail::contract(detail::apply_nodewise(p.material(), de), se));
  const double bending = q.dot(detail::contract(detail::apply_nodewise(p.material(), dh), sh)) / 24.0;
  const double load = p.r33() * q.dot(p.force().values.cwiseProduct(dv.values));
  return membrane + bending - load;
}

/// Gradient of the discrete total energy with respect to the nodal values
/// (and, on periodic grids, the mean strain stored in w.affine).
struct EnergyGradient {
  VectorField2 w;
  ScalarField v;
};

inline EnergyGradient energy_gradient(const PlateProblem& p, const VectorField2& w, const ScalarField& v) {
  check_fields(p, w, v);
  const auto& d = p.ops();
  const Eigen::VectorXd& q = p.weights();
  const int n = p.grid().size();

  const auto e = detail::membrane_strain(d, w, v);
  auto s = detail::apply_nodewise(p.material(), e);
  s.xx = s.xx.cwiseProduct(q);
  s.yy = s.yy.cwiseProduct(q);
  s.xy = s.xy.cwiseProduct(q);

  EnergyGradient g{VectorField2(p.grid()), ScalarField(p.grid())};
  g.w.values.head(n) = d.dx.transpose() * s.xx + d.dy.transpose() * s.xy;
  g.w.values.tail(n) = d.dx.transpose() * s.xy + d.dy.transpose() * s.yy;
  if (p.grid().periodic()) {
    g.w.affine << s.xx.sum(), s.xy.sum(), s.xy.sum(), s.yy.sum();
  }

  const Eigen::VectorXd gx = d.dx * v.values, gy = d.dy * v.values;
  const Eigen::VectorXd nx = s.xx.cwiseProduct(gx) + s.xy.cwiseProduct(gy);
  const Eigen::VectorXd ny = s.xy.cwiseProduct(gx) + s.yy.cwiseProduct(gy);
  g.v.values = d.dx.transpose() * nx + d.dy.transpose() * ny;

  auto m = detail::apply_nodewise(p.material(), detail::bending_strain(d, v));
  g.v.values += (d.dxx.transpose() * m.xx.cwiseProduct(q) + d.dyy.transpose() * m.yy.cwiseProduct(q) +
                 2.0 * (d.dxy.transpose() * m.xy.cwiseProduct(q))) /
                12.0;
  g.v.values -= p.r33() * q.cwiseProduct(p.force().values);
  return g;
}

} // namespace vkplate
