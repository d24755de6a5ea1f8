#pragma once

// Minimization of the discrete total energy. The membrane problem is a
// convex quadratic in w and is solved exactly (CG) for each v; v is advanced
// by a preconditioned L-BFGS step with Armijo backtracking on the reduced
// functional v -> min_w J(w, v). Criticality is certified through the
// gauge-projected gradient, which is the discrete weak Euler-Lagrange
// residual.

#include "vkplate/errors.hpp"
#include "vkplate/linalg.hpp"
#include "vkplate/plate_energy.hpp"
#include "vkplate/spectral.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <array>
#include <deque>
#include <numbers>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vkplate {

struct SolverConfig {
  int max_outer = 500;
  double tol_grad = 1e-9;
  double tol_el = 1e-8;
  double cg_tol = 1e-12;
  int cg_max = 5000;
  double backtrack = 0.5;   // beta
  double armijo_c1 = 1e-4;  // c1
  int max_backtracks = 60;
  int lbfgs_memory = 8;
  double init_scale = 1.0;  // multiple of the bending-only response used as seed
  std::string trace_path;   // empty: no trace file

  void validate() const {
    if (!(tol_grad > 0) || !(tol_el > 0) || !(cg_tol > 0))
      throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (!(backtrack > 0 && backtrack < 1))
      throw std::invalid_argument("SolverConfig: backtracking factor must lie in (0, 1)");
    if (!(armijo_c1 > 0 && armijo_c1 < 0.5))
      throw std::invalid_argument("SolverConfig: Armijo constant must lie in (0, 1/2)");
    if (max_outer < 0 || cg_max < 1 || max_backtracks < 1 || lbfgs_memory < 0)
      throw std::invalid_argument("SolverConfig: iteration limits must be positive");
  }
};

struct TraceRow {
  int iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double energy_change = 0.0; // accepted step, computed from strain differences
};

struct Solution {
  VectorField2 w;
  ScalarField v;
  EnergyBreakdown energy;
  double el_residual_1 = 0.0;
  double el_residual_2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
  std::vector<TraceRow> trace;
};

struct ElResiduals {
  double r1 = 0.0; // membrane balance (test fields w~)
  double r2 = 0.0; // bending balance with load (test fields v~)
};

namespace detail {

inline Eigen::VectorXd symgrad_transpose(const Stencils& d, const SymTensorField2& s) {
  const int n = static_cast<int>(s.xx.size());
  Eigen::VectorXd out(2 * n);
  out.head(n) = d.dx.transpose() * s.xx + d.dy.transpose() * s.xy;
  out.tail(n) = d.dx.transpose() * s.xy + d.dy.transpose() * s.yy;
  return out;
}

inline SymTensorField2 symgrad(const Grid& g, const Stencils& d, const Eigen::VectorXd& w) {
  const int n = g.size();
  SymTensorField2 e(g);
  e.xx = d.dx * w.head(n);
  e.yy = d.dy * w.tail(n);
  e.xy = 0.5 * (d.dy * w.head(n) + d.dx * w.tail(n));
  return e;
}

inline SymTensorField2 scaled(SymTensorField2 s, const Eigen::VectorXd& q) {
  s.xx = s.xx.cwiseProduct(q);
  s.yy = s.yy.cwiseProduct(q);
  s.xy = s.xy.cwiseProduct(q);
  return s;
}

inline SpMat sparse_diagonal(const Eigen::VectorXd& d) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(d.size());
  for (int i = 0; i < d.size(); ++i) t.emplace_back(i, i, d(i));
  SpMat m(d.size(), d.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Sparse K-weighted sum sum_ab K_ab A_a^T Q A_b.
inline SpMat weighted_gram(const std::array<SpMat, 3>& a, const Mat3& k, const Eigen::VectorXd& q) {
  const SpMat qd = sparse_diagonal(q);
  SpMat out(a[0].cols(), a[0].cols());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (k(i, j) != 0.0) out += SpMat(k(i, j) * SpMat(a[i].transpose()) * qd * a[j]);
  return out;
}

inline double smallest_eigenvalue(const Mat3& k) {
  return Eigen::SelfAdjointEigenSolver<Mat3>(k, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

} // namespace detail

/// Operators and preconditioners for one problem: exact Fourier inverses on
/// periodic grids, shifted sparse Cholesky factors on bounded grids. Holds
/// FFT buffers, so one instance must not be shared between threads.
class PlateWorkspace {
public:
  explicit PlateWorkspace(const PlateProblem& p) : p_(p) {
    const Mat3& k = p.material().matrix();
    const double q = p.grid().hx() * p.grid().hy();
    if (p.grid().periodic()) {
      spectrum_ = std::make_unique<PeriodicSpectrum>(p.grid());
      const int m = spectrum_->modes();
      wblocks_.resize(m);
      vdiag_.resize(m);
      // modes whose symbol vanishes up to roundoff (e.g. sin(pi)) are null modes
      const double kmax = Eigen::SelfAdjointEigenSolver<Mat3>(k, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
      const double top = 1.0 / std::min(p.grid().hx(), p.grid().hy());
      const double wcut = 1e-20 * q * kmax * std::pow(top, 2);
      const double vcut = 1e-20 * q * kmax * std::pow(top, 4);
      spectrum_->for_each_mode([&](int idx, const Symbols& s) {
        Eigen::Matrix<double, 3, 2> r;
        r << s.first_x, 0, 0, s.first_y, s.first_y / kSqrt2, s.first_x / kSqrt2;
        const Mat2 a = q * r.transpose() * k * r;
        const double det = a.determinant(), tr = a.trace();
        wblocks_[idx] = (tr > wcut && det > 1e-14 * tr * tr) ? Mat2(a.inverse()) : Mat2::Zero();
        const Vec3 h(s.second_x, s.second_y, kSqrt2 * s.mixed);
        const double b = q * h.dot(k * h) / 12.0;
        vdiag_[idx] = b > vcut ? 1.0 / b : 0.0;
      });
      return;
    }
    const auto& d = p.ops();
    const auto& qw = p.weights();
    const int n = p.grid().size();
    const double kmin = detail::smallest_eigenvalue(k);
    const double lmin = std::min(p.grid().lx, p.grid().ly);
    const double kw = std::numbers::pi / lmin;

    // w: S = [dx 0; 0 dy; dy/sqrt2 dx/sqrt2] in orthonormal coordinates
    SpMat zero(n, n);
    auto hstack = [&](const SpMat& a, const SpMat& b) {
      std::vector<Eigen::Triplet<double>> t;
      for (int r = 0; r < n; ++r) {
        for (SpMat::InnerIterator it(a, r); it; ++it) t.emplace_back(r, it.col(), it.value());
        for (SpMat::InnerIterator it(b, r); it; ++it) t.emplace_back(r, n + it.col(), it.value());
      }
      SpMat m(n, 2 * n);
      m.setFromTriplets(t.begin(), t.end());
      return m;
    };
    const std::array<SpMat, 3> s{hstack(d.dx, zero), hstack(zero, d.dy),
                                 hstack(SpMat(d.dy / kSqrt2), SpMat(d.dx / kSqrt2))};
    Eigen::VectorXd q2(2 * n);
    q2 << qw, qw;
    SpMat aw = detail::weighted_gram(s, k, qw);
    aw += detail::sparse_diagonal((1e-3 * kmin * kw * kw) * q2);
    wfactor_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(
        Eigen::SparseMatrix<double>(aw));

    const std::array<SpMat, 3> h{d.dxx, d.dyy, SpMat(kSqrt2 * d.dxy)};
    SpMat bv = detail::weighted_gram(h, k, qw) / 12.0;
    bv += detail::sparse_diagonal((1e-2 * kmin * std::pow(kw, 4) / 12.0) * qw);
    vfactor_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(
        Eigen::SparseMatrix<double>(bv));
    if (wfactor_->info() != Eigen::Success || vfactor_->info() != Eigen::Success)
      throw std::runtime_error("PlateWorkspace: preconditioner factorization failed");
  }

  const PlateProblem& problem() const { return p_; }

  /// A w with A = S^T Q L S, the Hessian of the membrane energy in w.
  Eigen::VectorXd membrane_apply(const Eigen::VectorXd& w) const {
    const auto& g = p_.grid();
    const auto e = detail::symgrad(g, p_.ops(), w);
    return detail::symgrad_transpose(p_.ops(),
                                     detail::scaled(detail::apply_nodewise(p_.material(), e), p_.weights()));
  }

  Eigen::VectorXd membrane_precondition(const Eigen::VectorXd& r) const {
    const int n = p_.grid().size();
    if (!spectrum_) return wfactor_->solve(r);
    auto c1 = spectrum_->forward(r.head(n));
    auto c2 = spectrum_->forward(r.tail(n));
    for (std::size_t k = 0; k < c1.size(); ++k) {
      const Mat2& b = wblocks_[k];
      const auto a1 = c1[k], a2 = c2[k];
      c1[k] = b(0, 0) * a1 + b(0, 1) * a2;
      c2[k] = b(1, 0) * a1 + b(1, 1) * a2;
    }
    Eigen::VectorXd out(2 * n);
    out.head(n) = spectrum_->backward(c1);
    out.tail(n) = spectrum_->backward(c2);
    return out;
  }

  /// Inverse of the bending Hessian (1/12) H^T Q L H (shifted on bounded grids).
  Eigen::VectorXd bending_precondition(const Eigen::VectorXd& g) const {
    if (!spectrum_) return vfactor_->solve(g);
    auto c = spectrum_->forward(g);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] *= vdiag_[k];
    return spectrum_->backward(c);
  }

private:
  const PlateProblem& p_;
  std::unique_ptr<PeriodicSpectrum> spectrum_;
  std::vector<Mat2> wblocks_;
  std::vector<double> vdiag_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> wfactor_, vfactor_;
};

/// Membrane solve for fixed v: minimizes the membrane energy over w, i.e.
/// the discrete weak form int <L2in(sym grad w + 1/2 grad v x grad v) : grad w~> = 0.
/// On periodic grids the mean strain w.affine is a degree of freedom, so
/// affine test fields are included. Throws SolverError on CG failure.
inline VectorField2 solve_membrane(const PlateWorkspace& ws, const ScalarField& v, double cg_tol, int cg_max) {
  const PlateProblem& p = ws.problem();
  require_same_grid(v.grid, p.grid(), "solve_membrane");
  const auto& d = p.ops();
  const int n = p.grid().size();
  const Eigen::VectorXd gx = d.dx * v.values, gy = d.dy * v.values;
  SymTensorField2 s(p.grid());
  s.xx = 0.5 * gx.cwiseAbs2();
  s.yy = 0.5 * gy.cwiseAbs2();
  s.xy = 0.5 * gx.cwiseProduct(gy);

  Mat2 affine = Mat2::Zero();
  if (p.grid().periodic()) {
    affine << -s.xx.mean(), -s.xy.mean(), -s.xy.mean(), -s.yy.mean();
    s.xx.array() += affine(0, 0);
    s.yy.array() += affine(1, 1);
    s.xy.array() += affine(0, 1);
  }
  const Eigen::VectorXd b =
      -detail::symgrad_transpose(d, detail::scaled(detail::apply_nodewise(p.material(), s), p.weights()));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * n);
  const auto& gauge = p.w_gauge();
  const auto rep = conjugate_gradient([&](const Eigen::VectorXd& x) { return ws.membrane_apply(x); }, b, w,
                                      [&](const Eigen::VectorXd& r) { return ws.membrane_precondition(r); },
                                      [&](Eigen::VectorXd& r) { gauge.fix_covector(r); }, cg_tol, cg_max);
  if (!rep.converged) {
    std::ostringstream os;
    os << "solve_membrane: CG did not converge in " << rep.iterations
       << " iterations, relative residual " << rep.relative_residual;
    throw SolverError(os.str(), rep.relative_residual);
  }
  gauge.fix_state(w);
  return VectorField2(p.grid(), std::move(w), affine);
}

inline VectorField2 solve_membrane(const PlateProblem& p, const ScalarField& v, const SolverConfig& cfg = {}) {
  PlateWorkspace ws(p);
  return solve_membrane(ws, v, cfg.cg_tol, cfg.cg_max);
}

/// Gauge-projected gradient components, the discrete weak residuals of the
/// membrane and bending Euler-Lagrange equations.
struct ProjectedGradient {
  Eigen::VectorXd w;    // 2n, covector
  Mat2 affine = Mat2::Zero();
  Eigen::VectorXd v;    // n, covector
};

inline ProjectedGradient projected_gradient(const PlateProblem& p, const VectorField2& w, const ScalarField& v) {
  auto g = energy_gradient(p, w, v);
  ProjectedGradient out{std::move(g.w.values), g.w.affine, std::move(g.v.values)};
  p.w_gauge().fix_covector(out.w);
  p.v_gauge().fix_covector(out.v);
  return out;
}

inline ElResiduals el_residuals(const ProjectedGradient& g, const PlateProblem& p) {
  ElResiduals r;
  const double aff = g.affine.squaredNorm() / p.grid().area();
  r.r1 = std::sqrt(std::pow(p.w_gauge().covector_norm(g.w), 2) + aff);
  r.r2 = p.v_gauge().covector_norm(g.v);
  return r;
}

/// Discrete L2 norms of the weak residuals of the membrane and bending
/// balance equations (the Riesz representatives of the projected gradient).
inline ElResiduals el_residuals(const PlateProblem& p, const VectorField2& w, const ScalarField& v) {
  return el_residuals(projected_gradient(p, w, v), p);
}

namespace detail {

class Lbfgs {
public:
  explicit Lbfgs(int memory) : memory_(memory) {}

  void clear() { pairs_.clear(); }
  bool empty() const { return pairs_.empty(); }

  void push(Eigen::VectorXd s, Eigen::VectorXd y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-14 * s.norm() * y.norm())) return;
    if (memory_ == 0) return;
    if (static_cast<int>(pairs_.size()) == memory_) pairs_.pop_front();
    pairs_.push_back({std::move(s), std::move(y), 1.0 / sy});
  }

  template <class H0>
  Eigen::VectorXd direction(const Eigen::VectorXd& g, H0&& h0) const {
    Eigen::VectorXd q = g;
    std::vector<double> alpha(pairs_.size());
    for (int i = static_cast<int>(pairs_.size()) - 1; i >= 0; --i) {
      alpha[i] = pairs_[i].rho * pairs_[i].s.dot(q);
      q -= alpha[i] * pairs_[i].y;
    }
    Eigen::VectorXd r = h0(q);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const double beta = pairs_[i].rho * pairs_[i].y.dot(r);
      r += (alpha[i] - beta) * pairs_[i].s;
    }
    return -r;
  }

private:
  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  int memory_;
  std::deque<Pair> pairs_;
};

} // namespace detail

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iter,energy,grad_norm,r1,r2\n" << std::setprecision(17);
  for (const auto& t : trace)
    os << t.iter << ',' << t.energy << ',' << t.grad_norm << ',' << t.r1 << ',' << t.r2 << '\n';
}

/// Bending-only response to the load: the solution of the linearized
/// equations at v = 0.
inline ScalarField bending_response(const PlateWorkspace& ws) {
  const PlateProblem& p = ws.problem();
  Eigen::VectorXd rhs = p.r33() * p.weights().cwiseProduct(p.force().values);
  p.v_gauge().fix_covector(rhs);
  Eigen::VectorXd v = ws.bending_precondition(rhs);
  p.v_gauge().fix_state(v);
  return ScalarField(p.grid(), std::move(v));
}

struct InitialState {
  VectorField2 w;
  ScalarField v;
};

/// Alternating minimization of J. Never throws on non-convergence: the
/// returned Solution carries converged = false and a diagnostic message.
inline Solution minimize(const PlateProblem& p, const SolverConfig& cfg,
                         const std::optional<InitialState>& init = std::nullopt) {
  cfg.validate();
  PlateWorkspace ws(p);
  Solution sol;

  ScalarField v(p.grid());
  if (init) {
    require_same_grid(init->v.grid, p.grid(), "minimize init");
    v = init->v;
  } else {
    v = bending_response(ws);
    v.values *= cfg.init_scale;
  }
  p.v_gauge().fix_state(v.values);

  const auto bending_inverse = [&](const Eigen::VectorXd& g) {
    Eigen::VectorXd h = ws.bending_precondition(g);
    p.v_gauge().fix_state(h);
    return h;
  };

  auto finish = [&](VectorField2 w, ScalarField vv, const ProjectedGradient& g, int iters, std::string msg) {
    const auto r = el_residuals(g, p);
    sol.w = std::move(w);
    sol.v = std::move(vv);
    sol.energy = energy(p, sol.w, sol.v);
    sol.el_residual_1 = r.r1;
    sol.el_residual_2 = r.r2;
    sol.iterations = iters;
    sol.converged = r.r1 <= cfg.tol_el && r.r2 <= cfg.tol_el;
    if (sol.converged && !msg.empty())
      msg = "converged (stopped: " + msg + ")";
    else if (msg.empty())
      msg = sol.converged ? "converged"
                          : "residuals above tolerance (r1 = " + std::to_string(r.r1) +
                                ", r2 = " + std::to_string(r.r2) + ")";
    sol.message = std::move(msg);
    if (!cfg.trace_path.empty()) {
      std::ofstream out(cfg.trace_path);
      write_trace_csv(out, sol.trace);
    }
    return sol;
  };

  VectorField2 w(p.grid());
  try {
    w = solve_membrane(ws, v, cfg.cg_tol, cfg.cg_max);
  } catch (const SolverError& e) {
    return finish(w, v, projected_gradient(p, w, v), 0, e.what());
  }
  auto g = projected_gradient(p, w, v);
  auto res = el_residuals(g, p);
  double e_now = energy(p, w, v).total;
  sol.trace.push_back({0, e_now, std::hypot(res.r1, res.r2), res.r1, res.r2, 0.0});

  detail::Lbfgs memory(cfg.lbfgs_memory);
  int iter = 0;
  for (; iter < cfg.max_outer; ++iter) {
    if (std::hypot(res.r1, res.r2) <= cfg.tol_grad) break;

    Eigen::VectorXd dir = memory.direction(g.v, bending_inverse);
    p.v_gauge().fix_state(dir);
    double slope = g.v.dot(dir);
    if (!(slope < 0.0)) {
      memory.clear();
      dir = -bending_inverse(g.v);
      slope = g.v.dot(dir);
      if (!(slope < 0.0)) return finish(w, v, g, iter, "no descent direction available");
    }

    double t = 1.0;
    bool accepted = false;
    ScalarField v_try(p.grid());
    VectorField2 w_try(p.grid());
    double de = 0.0;
    for (int k = 0; k < cfg.max_backtracks; ++k, t *= cfg.backtrack) {
      v_try.values = v.values + t * dir;
      try {
        w_try = solve_membrane(ws, v_try, cfg.cg_tol, cfg.cg_max);
      } catch (const SolverError& e) {
        return finish(w, v, g, iter, e.what());
      }
      de = energy_change(p, w, v, w_try, v_try);
      if (de <= cfg.armijo_c1 * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      return finish(w, v, g, iter, "line search failed to find sufficient decrease");
    }

    auto g_new = projected_gradient(p, w_try, v_try);
    memory.push(v_try.values - v.values, g_new.v - g.v);
    v = std::move(v_try);
    w = std::move(w_try);
    g = std::move(g_new);
    res = el_residuals(g, p);
    e_now = energy(p, w, v).total;
    sol.trace.push_back({iter + 1, e_now, std::hypot(res.r1, res.r2), res.r1, res.r2, de});
  }
  return finish(w, v, g, iter, iter >= cfg.max_outer && std::hypot(res.r1, res.r2) > cfg.tol_grad
                                   ? "maximum outer iterations reached"
                                   : "");
}

} // namespace vkplate
