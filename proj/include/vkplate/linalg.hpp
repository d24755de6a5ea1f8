#pragma once

// Preconditioned conjugate gradients and gauge (null-space) projections.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace vkplate {

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Solves A x = b for symmetric positive (semi)definite A, starting from x.
/// `clean` is applied to every residual; for a singular consistent system it
/// removes the roundoff drift out of the range of A.
template <class Op, class Prec, class Clean>
CgReport conjugate_gradient(Op&& apply, const Eigen::VectorXd& b, Eigen::VectorXd& x, Prec&& prec,
                            Clean&& clean, double tol, int max_iter) {
  CgReport rep;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    rep.converged = true;
    return rep;
  }
  Eigen::VectorXd r = b - apply(x);
  clean(r);
  rep.relative_residual = r.norm() / bnorm;
  if (rep.relative_residual <= tol) {
    rep.converged = true;
    return rep;
  }
  Eigen::VectorXd z = prec(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    clean(r);
    rep.iterations = it;
    rep.relative_residual = r.norm() / bnorm;
    if (rep.relative_residual <= tol) {
      rep.converged = true;
      return rep;
    }
    z = prec(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return rep;
}

/// A finite set of null directions, orthonormalized in the weighted inner
/// product <a, b>_q = sum q_k a_k b_k.
class NullSpace {
public:
  NullSpace() = default;
  NullSpace(const std::vector<Eigen::VectorXd>& directions, Eigen::VectorXd weights)
      : q_(std::move(weights)) {
    for (Eigen::VectorXd b : directions) {
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& e : basis_) b -= e * e.dot(q_.cwiseProduct(b));
      const double n = std::sqrt(b.dot(q_.cwiseProduct(b)));
      if (n > 1e-12) basis_.push_back(b / n);
    }
  }

  const Eigen::VectorXd& weights() const { return q_; }
  int dimension() const { return static_cast<int>(basis_.size()); }

  /// Removes the null components of a state (weighted orthogonal projection).
  void fix_state(Eigen::VectorXd& x) const {
    for (const auto& e : basis_) x -= e * e.dot(q_.cwiseProduct(x));
  }

  /// Removes the components of a covector (gradient) that pair with null
  /// directions; afterwards e.g = 0 for every null direction e.
  void fix_covector(Eigen::VectorXd& g) const {
    for (const auto& e : basis_) g -= q_.cwiseProduct(e) * e.dot(g);
  }

  /// Norm of the weighted Riesz representative g/q, sqrt(sum g_k^2 / q_k).
  double covector_norm(const Eigen::VectorXd& g) const {
    return std::sqrt(g.cwiseAbs2().cwiseQuotient(q_).sum());
  }

private:
  Eigen::VectorXd q_;
  std::vector<Eigen::VectorXd> basis_;
};

} // namespace vkplate
