#pragma once

// Isotropic von Karman equations in Airy-potential form.
//
// Incompressible, with Phi = 2 mu Phi1 and the load on the deflection
// equation:
//   Laplace^2 v    = 6 [v, Phi1] + (3/mu) r33 f
//   Laplace^2 Phi1 = -3/4 [v, v]
// Compressible (Poisson ratio nu, Young's modulus S, bending stiffness B):
//   B Laplace^2 v  = [v, Phi] + r33 f,   Laplace^2 Phi = -S/2 [v, v]
// where [u, p] = grad^2 u : cof grad^2 p.

#include "vkplate/errors.hpp"
#include "vkplate/grid.hpp"
#include "vkplate/linalg.hpp"
#include "vkplate/solver.hpp"
#include "vkplate/spectral.hpp"
#include "vkplate/stencils.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace vkplate {

/// Lame modulus mu with Poisson ratio nu; nu = 1/2 is the incompressible case.
struct IsotropicParams {
  double mu = 1.0;
  double nu = 0.5;

  static IsotropicParams from_poisson(double mu, double nu) {
    if (!(mu > 0.0)) throw std::invalid_argument("IsotropicParams: mu must be positive");
    if (!(nu >= 0.0 && nu <= 0.5)) throw std::invalid_argument("IsotropicParams: nu must lie in [0, 1/2]");
    return {mu, nu};
  }
  static IsotropicParams from_lame(double mu, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("IsotropicParams: lambda must be non-negative");
    return from_poisson(mu, lambda / (2.0 * (mu + lambda)));
  }
  static IsotropicParams incompressible(double mu) { return from_poisson(mu, 0.5); }

  /// lambda = 2 mu nu / (1 - 2 nu); infinite at nu = 1/2.
  double lambda() const {
    return nu == 0.5 ? std::numeric_limits<double>::infinity() : 2.0 * mu * nu / (1.0 - 2.0 * nu);
  }
  double youngs() const { return 2.0 * mu * (1.0 + nu); }
  double bending_stiffness() const { return youngs() / (12.0 * (1.0 - nu * nu)); }
};

/// B / mu = (1 + nu) / (6 (1 - nu^2)) and S / (2 mu) = 1 + nu for any
/// field-like R, so the incompressible limits can be checked exactly.
template <class R>
R bending_stiffness_over_mu(const R& nu) {
  return R(2) * (R(1) + nu) / (R(12) * (R(1) - nu * nu));
}

template <class R>
R half_youngs_over_mu(const R& nu) {
  return R(1) + nu;
}

enum class BiharmonicBc { periodic, clamped };

struct FixedPointConfig {
  double alpha = 0.7;      // damping, halved whenever the residual grows
  double min_alpha = 1e-3;
  double tol = 1e-10;      // relative residual, or relative undamped update of v
  int max_iter = 2000;
  double blowup = 1e8;     // residual growth factor treated as divergence
};

/// Deflection v and scaled Airy potential Phi1 = Phi / (2 mu).
struct AiryState {
  ScalarField v;
  ScalarField phi1;
  double residual_v = 0.0;
  double residual_phi = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

/// [u, p] = grad^2 u : cof grad^2 p, node-wise.
inline ScalarField airy_bracket(const Stencils& d, const ScalarField& u, const ScalarField& p) {
  const Eigen::VectorXd uxx = d.dxx * u.values, uyy = d.dyy * u.values, uxy = d.dxy * u.values;
  const Eigen::VectorXd pxx = d.dxx * p.values, pyy = d.dyy * p.values, pxy = d.dxy * p.values;
  return ScalarField(u.grid, uxx.cwiseProduct(pyy) + uyy.cwiseProduct(pxx) - 2.0 * uxy.cwiseProduct(pxy));
}

inline ScalarField airy_bracket(const ScalarField& u, const ScalarField& p, const Grid& grid) {
  require_same_grid(u.grid, grid, "airy_bracket(u)");
  require_same_grid(p.grid, grid, "airy_bracket(p)");
  return airy_bracket(Stencils(grid), u, p);
}

/// Discrete squared Laplacian with its inverse. Periodic grids use the
/// Fourier diagonalization of the five-point Laplacian squared; clamped
/// (bounded) grids the 13-point stencil with u = du/dn = 0, solved by CG.
class Biharmonic {
public:
  Biharmonic(const Grid& g, BiharmonicBc bc) : grid_(g), bc_(bc) {
    if ((bc == BiharmonicBc::periodic) != g.periodic())
      throw std::invalid_argument("Biharmonic: periodic conditions need a periodic grid, clamped a bounded one");
    if (bc == BiharmonicBc::periodic) {
      spectrum_ = std::make_unique<PeriodicSpectrum>(g);
      return;
    }
    build_clamped();
  }

  const Grid& grid() const { return grid_; }
  BiharmonicBc bc() const { return bc_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
    if (spectrum_)
      return spectrum_->apply_multiplier(u, [](const Symbols& s) {
        const double l = s.second_x + s.second_y;
        return l * l;
      });
    Eigen::VectorXd out = Eigen::VectorXd::Zero(grid_.size());
    const Eigen::VectorXd r = op_ * gather(u);
    scatter(r, out);
    return out;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double cg_tol = 1e-13, int cg_max = 20000) const {
    if (rhs.size() != grid_.size()) throw GridMismatch("biharmonic_solve: rhs size");
    if (spectrum_) {
      const double m = rhs.mean();
      if (std::abs(m) > 1e-10 * std::max(rhs.cwiseAbs().maxCoeff(), 1e-300) && rhs.cwiseAbs().maxCoeff() > 0)
        throw std::invalid_argument("biharmonic_solve: periodic right-hand side must have zero mean");
      return spectrum_->apply_multiplier(rhs, [](const Symbols& s) {
        const double l = s.second_x + s.second_y;
        return l == 0.0 ? 0.0 : 1.0 / (l * l);
      });
    }
    const Eigen::VectorXd b = gather(rhs);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    const Eigen::VectorXd inv_diag = op_.diagonal().cwiseInverse();
    const auto rep = conjugate_gradient([&](const Eigen::VectorXd& y) { return Eigen::VectorXd(op_ * y); }, b, x,
                                        [&](const Eigen::VectorXd& r) { return Eigen::VectorXd(inv_diag.cwiseProduct(r)); },
                                        [](Eigen::VectorXd&) {}, cg_tol, cg_max);
    if (!rep.converged) {
      std::ostringstream os;
      os << "biharmonic_solve: CG stopped after " << rep.iterations << " iterations, relative residual "
         << rep.relative_residual;
      throw SolverError(os.str(), rep.relative_residual);
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(grid_.size());
    scatter(x, out);
    return out;
  }

  /// Restricts r to the range of the operator: zero mean on periodic grids,
  /// zero edge values on clamped ones.
  void project(Eigen::VectorXd& r) const {
    if (spectrum_) {
      r.array() -= r.mean();
      return;
    }
    Eigen::VectorXd inner = Eigen::VectorXd::Zero(r.size());
    scatter(gather(r), inner);
    r = inner;
  }

  /// Interior-node operator matrix on bounded grids (empty for periodic).
  const SpMat& clamped_matrix() const { return op_; }

private:
  int interior_index(int i, int j) const { return (j - 1) * (grid_.nx - 2) + (i - 1); }

  Eigen::VectorXd gather(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r((grid_.nx - 2) * (grid_.ny - 2));
    for (int j = 1; j < grid_.ny - 1; ++j)
      for (int i = 1; i < grid_.nx - 1; ++i) r(interior_index(i, j)) = full(grid_.index(i, j));
    return r;
  }

  void scatter(const Eigen::VectorXd& inner, Eigen::VectorXd& full) const {
    for (int j = 1; j < grid_.ny - 1; ++j)
      for (int i = 1; i < grid_.nx - 1; ++i) full(grid_.index(i, j)) = inner(interior_index(i, j));
  }

  // Laplacian of the interior unknowns at every node, edge values zero and
  // ghost values mirrored (u_{-1} = u_1) for the zero normal derivative;
  // the biharmonic is the five-point Laplacian of that at interior nodes.
  void build_clamped() {
    const int nx = grid_.nx, ny = grid_.ny, m = (nx - 2) * (ny - 2);
    const double ax = 1.0 / (grid_.hx() * grid_.hx()), ay = 1.0 / (grid_.hy() * grid_.hy());
    auto interior = [&](int i, int j) { return i > 0 && i < nx - 1 && j > 0 && j < ny - 1; };
    std::vector<Eigen::Triplet<double>> t;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int row = grid_.index(i, j);
        auto add = [&](int ii, int jj, double c) {
          if (ii < 0) ii = -ii;
          if (jj < 0) jj = -jj;
          if (ii > nx - 1) ii = 2 * (nx - 1) - ii;
          if (jj > ny - 1) jj = 2 * (ny - 1) - jj;
          if (interior(ii, jj)) t.emplace_back(row, interior_index(ii, jj), c);
        };
        add(i - 1, j, ax);
        add(i + 1, j, ax);
        add(i, j - 1, ay);
        add(i, j + 1, ay);
        add(i, j, -2.0 * (ax + ay));
      }
    SpMat lap_all(grid_.size(), m);
    lap_all.setFromTriplets(t.begin(), t.end());

    t.clear();
    for (int j = 1; j < ny - 1; ++j)
      for (int i = 1; i < nx - 1; ++i) {
        const int row = interior_index(i, j);
        t.emplace_back(row, grid_.index(i - 1, j), ax);
        t.emplace_back(row, grid_.index(i + 1, j), ax);
        t.emplace_back(row, grid_.index(i, j - 1), ay);
        t.emplace_back(row, grid_.index(i, j + 1), ay);
        t.emplace_back(row, grid_.index(i, j), -2.0 * (ax + ay));
      }
    SpMat lap_in(m, grid_.size());
    lap_in.setFromTriplets(t.begin(), t.end());
    op_ = lap_in * lap_all;
  }

  Grid grid_;
  BiharmonicBc bc_;
  std::unique_ptr<PeriodicSpectrum> spectrum_;
  SpMat op_;
};

/// Discrete Laplace^2 u = rhs. Periodic results have zero mean.
inline ScalarField biharmonic_solve(const ScalarField& rhs, const Grid& grid, BiharmonicBc bc) {
  require_same_grid(rhs.grid, grid, "biharmonic_solve");
  return ScalarField(grid, Biharmonic(grid, bc).solve(rhs.values));
}

namespace detail {

// Laplace^2 v = a [v, Phi1] + c f,  Laplace^2 Phi1 = -b [v, v]
struct VkCoefficients {
  double a, b, c;
};

inline ScalarField potential_from(const Biharmonic& bh, const Stencils& d, const ScalarField& v, double b) {
  Eigen::VectorXd r = -b * airy_bracket(d, v, v).values;
  bh.project(r);
  return ScalarField(v.grid, bh.solve(r));
}

inline AiryState solve_vk_system(const VkCoefficients& k, const ScalarField& f, const Grid& grid,
                                 const FixedPointConfig& cfg) {
  require_same_grid(f.grid, grid, "solve_vk");
  if (!(cfg.alpha > 0 && cfg.alpha <= 1)) throw std::invalid_argument("FixedPointConfig: alpha must lie in (0, 1]");
  const Biharmonic bh(grid, grid.periodic() ? BiharmonicBc::periodic : BiharmonicBc::clamped);
  const Stencils d(grid);

  Eigen::VectorXd load = k.c * f.values;
  if (grid.periodic() && std::abs(load.mean()) > 1e-10 * std::max(load.cwiseAbs().maxCoeff(), 1e-300))
    throw std::invalid_argument("solve_vk: periodic load must have zero mean");
  bh.project(load);
  const double scale = l2_norm(grid, load);

  AiryState st;
  st.v = ScalarField(grid);
  st.phi1 = ScalarField(grid);
  double alpha = cfg.alpha;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= cfg.max_iter; ++it) {
    st.phi1 = potential_from(bh, d, st.v, k.b);
    Eigen::VectorXd rhs = k.a * airy_bracket(d, st.v, st.phi1).values + load;
    bh.project(rhs);
    const Eigen::VectorXd res = bh.apply(st.v.values) - rhs;
    const double rel = scale > 0 ? l2_norm(grid, res) / scale : l2_norm(grid, res);
    st.history.push_back(rel);
    st.iterations = it;
    if (!std::isfinite(rel) || (it > 3 && rel > cfg.blowup * st.history.front()))
      throw DivergenceError("solve_vk: fixed-point iteration diverged", st.history);
    if (rel <= cfg.tol) {
      st.converged = true;
      break;
    }
    if (it == cfg.max_iter) break;
    if (rel > previous) alpha = std::max(0.5 * alpha, cfg.min_alpha);
    previous = rel;
    const Eigen::VectorXd v_new = bh.solve(rhs);
    // on fine grids the residual floor is eps / h^4; the update has no such floor
    if (l2_norm(grid, v_new - st.v.values) <= cfg.tol * l2_norm(grid, v_new)) {
      st.v.values = v_new;
      st.phi1 = potential_from(bh, d, st.v, k.b);
      st.converged = true;
      break;
    }
    st.v.values = (1.0 - alpha) * st.v.values + alpha * v_new;
  }
  // residuals of the returned pair
  Eigen::VectorXd rv = k.a * airy_bracket(d, st.v, st.phi1).values + load;
  bh.project(rv);
  rv = bh.apply(st.v.values) - rv;
  Eigen::VectorXd rp = -k.b * airy_bracket(d, st.v, st.v).values;
  bh.project(rp);
  rp = bh.apply(st.phi1.values) - rp;
  st.residual_v = scale > 0 ? l2_norm(grid, rv) / scale : l2_norm(grid, rv);
  const double pscale = l2_norm(grid, k.b * airy_bracket(d, st.v, st.v).values);
  st.residual_phi = pscale > 0 ? l2_norm(grid, rp) / pscale : l2_norm(grid, rp);
  return st;
}

} // namespace detail

/// Incompressible system in mu-free scaled form with the load restored:
/// Laplace^2 v = 6 [v, Phi1] + (3/mu) r33 f, Laplace^2 Phi1 = -3/4 [v, v].
/// Residuals in the returned state are relative to the load term.
inline AiryState solve_vk(const IsotropicParams& params, const ScalarField& f, double r33, const Grid& grid,
                          const FixedPointConfig& cfg = {}) {
  return detail::solve_vk_system({6.0, 0.75, 3.0 * r33 / params.mu}, f, grid, cfg);
}

/// Compressible system B Laplace^2 v = [v, Phi] + r33 f, Laplace^2 Phi = -S/2 [v, v],
/// reported through Phi1 = Phi / (2 mu).
inline AiryState solve_compressible_vk(const IsotropicParams& params, const ScalarField& f, double r33,
                                       const Grid& grid, const FixedPointConfig& cfg = {}) {
  if (!(params.nu < 0.5)) throw std::invalid_argument("solve_compressible_vk: nu must be below 1/2");
  const double b = params.bending_stiffness(), s = params.youngs();
  return detail::solve_vk_system({2.0 * params.mu / b, s / (4.0 * params.mu), r33 / b}, f, grid, cfg);
}

struct RecoveredW {
  VectorField2 w;
  double misfit = 0.0; // int |sym grad w - M|^2
};

/// Target symmetric gradient M from the constitutive relation
/// cof grad^2 Phi = 2 mu (M + Tr M Id) + 2 mu (1/2 grad v x grad v + 1/2 |grad v|^2 Id).
inline SymTensorField2 recovery_target(const Stencils& d, const ScalarField& v, const ScalarField& phi1) {
  const Eigen::VectorXd gx = d.dx * v.values, gy = d.dy * v.values;
  const Eigen::VectorXd half_sq = 0.5 * (gx.cwiseAbs2() + gy.cwiseAbs2());
  SymTensorField2 a(v.grid);
  // (1/2mu) cof grad^2 Phi = cof grad^2 Phi1
  a.xx = d.dyy * phi1.values - 0.5 * gx.cwiseAbs2() - half_sq;
  a.yy = d.dxx * phi1.values - 0.5 * gy.cwiseAbs2() - half_sq;
  a.xy = -(d.dxy * phi1.values) - 0.5 * gx.cwiseProduct(gy);
  // M + (Tr M) Id = A  <=>  M = A - (Tr A / 3) Id
  const Eigen::VectorXd third = (a.xx + a.yy) / 3.0;
  a.xx -= third;
  a.yy -= third;
  return a;
}

/// In-plane displacement from the Airy potential by least squares on the
/// gauge-fixed subspace. On periodic grids the mean of M becomes w.affine.
inline RecoveredW recover_w(const AiryState& state, const IsotropicParams& params, const Grid& grid,
                            double cg_tol = 1e-12, int cg_max = 20000) {
  (void)params; // the scaled potential already carries the 1/(2 mu)
  require_same_grid(state.v.grid, grid, "recover_w(v)");
  require_same_grid(state.phi1.grid, grid, "recover_w(phi1)");
  const PlateProblem unit(grid, LinOp2::from_matrix(Mat3::Identity()), ScalarField(grid), 0.0);
  const PlateWorkspace ws(unit);
  const auto& d = unit.ops();
  auto m = recovery_target(d, state.v, state.phi1);

  Mat2 affine = Mat2::Zero();
  if (grid.periodic()) {
    affine << m.xx.mean(), m.xy.mean(), m.xy.mean(), m.yy.mean();
    m.xx.array() -= affine(0, 0);
    m.yy.array() -= affine(1, 1);
    m.xy.array() -= affine(0, 1);
  }
  const Eigen::VectorXd b = detail::symgrad_transpose(d, detail::scaled(m, unit.weights()));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * grid.size());
  const auto rep = conjugate_gradient([&](const Eigen::VectorXd& x) { return ws.membrane_apply(x); }, b, w,
                                      [&](const Eigen::VectorXd& r) { return ws.membrane_precondition(r); },
                                      [&](Eigen::VectorXd& r) { unit.w_gauge().fix_covector(r); }, cg_tol, cg_max);
  if (!rep.converged) throw SolverError("recover_w: least-squares CG did not converge", rep.relative_residual);
  unit.w_gauge().fix_state(w);

  auto e = detail::symgrad(grid, d, w);
  e.xx -= m.xx;
  e.yy -= m.yy;
  e.xy -= m.xy;
  RecoveredW out{VectorField2(grid, std::move(w), affine), 0.0};
  out.misfit = unit.weights().dot(detail::contract(e, e));
  return out;
}

struct LimitRow {
  double nu = 0.0;
  double bending_stiffness = 0.0; // B(nu)
  double half_youngs = 0.0;       // S(nu)/2
  double v_error = 0.0;           // ||v_nu - v_inc||
  double phi_error = 0.0;         // ||Phi_nu - Phi_inc||, Phi = 2 mu Phi1
  bool converged = false;         // both fixed points reached tolerance
};

/// Compressible solutions for each nu against the incompressible one.
inline std::vector<LimitRow> limit_study(double mu, const ScalarField& f, double r33, const Grid& grid,
                                         const std::vector<double>& nu_list, const FixedPointConfig& cfg = {}) {
  std::vector<LimitRow> rows;
  if (nu_list.empty()) return rows;
  for (double nu : nu_list)
    if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("limit_study: nu must lie in [0, 1/2)");
  const auto inc = solve_vk(IsotropicParams::incompressible(mu), f, r33, grid, cfg);
  for (double nu : nu_list) {
    const auto params = IsotropicParams::from_poisson(mu, nu);
    const auto st = solve_compressible_vk(params, f, r33, grid, cfg);
    LimitRow row;
    row.nu = nu;
    row.bending_stiffness = params.bending_stiffness();
    row.half_youngs = 0.5 * params.youngs();
    row.v_error = l2_norm(grid, st.v.values - inc.v.values);
    row.phi_error = 2.0 * mu * l2_norm(grid, st.phi1.values - inc.phi1.values);
    row.converged = inc.converged && st.converged;
    rows.push_back(row);
  }
  return rows;
}

} // namespace vkplate
