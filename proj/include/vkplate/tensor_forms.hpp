#pragma once

// Small dense tensor algebra and the reduction of the 3d elasticity form
// to the incompressible plate form.
//
// Symmetric matrices are handled through orthonormal coordinates:
//   2x2: (11, 22, sqrt2*12)
//   3x3: (11, 22, 33, sqrt2*23, sqrt2*13, sqrt2*12)
// so <A:B> = a.b for symmetric A, B and every quadratic form is a plain
// symmetric matrix in these coordinates.

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace vkplate {

using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kSqrt2 = 1.41421356237309504880;

template <class A, class B>
double frobenius(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a.transpose() * b).trace();
}

template <class M>
auto sym(const Eigen::MatrixBase<M>& m) {
  return (0.5 * (m + m.transpose())).eval();
}

/// [cof M]_ij = (-1)^(i+j) det of M with row i and column j removed.
inline Mat2 cof2(const Mat2& m) {
  Mat2 c;
  c << m(1, 1), -m(1, 0), -m(0, 1), m(0, 0);
  return c;
}

namespace symcoords {

inline Vec3 of(const Mat2& m) {
  return {m(0, 0), m(1, 1), kSqrt2 * 0.5 * (m(0, 1) + m(1, 0))};
}

inline Mat2 mat2(const Vec3& c) {
  Mat2 m;
  const double off = c(2) / kSqrt2;
  m << c(0), off, off, c(1);
  return m;
}

inline Vec6 of(const Mat3& m) {
  Vec6 c;
  c << m(0, 0), m(1, 1), m(2, 2), kSqrt2 * 0.5 * (m(1, 2) + m(2, 1)),
      kSqrt2 * 0.5 * (m(0, 2) + m(2, 0)), kSqrt2 * 0.5 * (m(0, 1) + m(1, 0));
  return c;
}

inline Mat3 mat3(const Vec6& c) {
  Mat3 m;
  const double m23 = c(3) / kSqrt2, m13 = c(4) / kSqrt2, m12 = c(5) / kSqrt2;
  m << c(0), m12, m13, m12, c(1), m23, m13, m23, c(2);
  return m;
}

/// The k-th orthonormal basis matrix of the symmetric 3x3 space.
inline Mat3 basis3(int k) {
  Vec6 e = Vec6::Zero();
  e(k) = 1.0;
  return mat3(e);
}

} // namespace symcoords

namespace detail {

/// Symmetric-matrix validity: symmetric, and smallest eigenvalue above
/// 1e-10 of the largest.
template <int N>
void check_positive_definite(const Eigen::Matrix<double, N, N>& k, const char* what) {
  if (!k.allFinite())
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  const double scale = k.cwiseAbs().maxCoeff();
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0))
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(k, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin <= 1e-10 * lmax) {
    std::ostringstream os;
    os << what << ": not positive definite on symmetric matrices (eigenvalue check: min "
       << lmin << ", max " << lmax << ", threshold 1e-10*max)";
    throw std::invalid_argument(os.str());
  }
}

} // namespace detail

/// Quadratic form on 3x3 matrices, Q3(F) = k(sym F, sym F), stored as a 6x6
/// matrix in orthonormal symmetric coordinates.
class QuadForm3 {
public:
  /// Throws std::invalid_argument unless k is symmetric positive definite.
  static QuadForm3 from_matrix(const Mat6& k) {
    detail::check_positive_definite<6>(k, "QuadForm3");
    return QuadForm3(0.5 * (k + k.transpose()));
  }

  const Mat6& matrix() const { return k_; }

  double operator()(const Mat3& f) const {
    const Vec6 c = symcoords::of(f);
    return c.dot(k_ * c);
  }

  /// The associated symmetric operator L3, <L3(F):F> = Q3(F).
  Mat3 apply(const Mat3& f) const { return symcoords::mat3(k_ * symcoords::of(f)); }

private:
  explicit QuadForm3(const Mat6& k) : k_(k) {}
  Mat6 k_;
};

/// Isotropic form 2 mu |sym F|^2 + lambda (Tr F)^2.
inline QuadForm3 q3_isotropic(double lambda, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("q3_isotropic: mu must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("q3_isotropic: lambda must be non-negative");
  Vec6 t;
  t << 1, 1, 1, 0, 0, 0;
  const Mat6 k = 2.0 * mu * Mat6::Identity() + lambda * t * t.transpose();
  return QuadForm3::from_matrix(k);
}

/// Reads a 6x6 symmetric matrix (whitespace separated, '#' comments) in the
/// basis ordering (11, 22, 33, sqrt2*23, sqrt2*13, sqrt2*12).
inline QuadForm3 read_quadform3(std::istream& in) {
  Mat6 k;
  int count = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      if (count >= 36) throw std::invalid_argument("QuadForm3 file: more than 36 entries");
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size())
        throw std::invalid_argument("QuadForm3 file: bad number '" + tok + "'");
      k(count / 6, count % 6) = x;
      ++count;
    }
  }
  if (count != 36)
    throw std::invalid_argument("QuadForm3 file: expected 36 entries, got " + std::to_string(count));
  return QuadForm3::from_matrix(k);
}

inline QuadForm3 load_quadform3(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open material file '" + path + "'");
  return read_quadform3(in);
}

/// Symmetric linear operator on symmetric 2x2 matrices, as a 3x3 matrix in
/// orthonormal coordinates.
class LinOp2 {
public:
  static LinOp2 from_matrix(const Mat3& m) {
    detail::check_positive_definite<3>(m, "LinOp2");
    return LinOp2(0.5 * (m + m.transpose()));
  }

  const Mat3& matrix() const { return m_; }

  /// L(F) for the symmetric part of F; the result is symmetric.
  Mat2 apply(const Mat2& f) const { return symcoords::mat2(m_ * symcoords::of(f)); }

  /// Q(F) = <L(F):F>.
  double operator()(const Mat2& f) const {
    const Vec3 c = symcoords::of(f);
    return c.dot(m_ * c);
  }

private:
  explicit LinOp2(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Matrix of the symmetric bilinear form associated with a quadratic form q on
/// R^N, via <L(x), y> = (q(x + y) - q(x - y)) / 4 on the unit vectors.
template <int N, class Form>
Eigen::Matrix<double, N, N> polarize(const Form& q) {
  using Vec = Eigen::Matrix<double, N, 1>;
  Eigen::Matrix<double, N, N> l;
  for (int i = 0; i < N; ++i) {
    for (int j = i; j < N; ++j) {
      const Vec ei = Vec::Unit(i), ej = Vec::Unit(j);
      l(i, j) = 0.25 * (q(Vec(ei + ej)) - q(Vec(ei - ej)));
      l(j, i) = l(i, j);
    }
  }
  return l;
}

namespace detail {

// Coordinates of the completion [[F'', d], [d^T, -Tr F'']] split as
// T * c(F'') + U * (d1, d2).
inline Eigen::Matrix<double, 6, 3> completion_in_plane() {
  Eigen::Matrix<double, 6, 3> t = Eigen::Matrix<double, 6, 3>::Zero();
  t(0, 0) = 1;
  t(1, 1) = 1;
  t(2, 0) = -1;
  t(2, 1) = -1;
  t(5, 2) = 1;
  return t;
}

inline Eigen::Matrix<double, 6, 2> completion_out_of_plane() {
  Eigen::Matrix<double, 6, 2> u = Eigen::Matrix<double, 6, 2>::Zero();
  u(4, 0) = kSqrt2; // 13 <- d1
  u(3, 1) = kSqrt2; // 23 <- d2
  return u;
}

} // namespace detail

/// Minimizer d in R^3 of Q3(F'' + d x e3 + e3 x d) under the trace-free
/// constraint. d3 = -Tr F''/2 is forced; (d1, d2) solve the 2x2 stationarity
/// system.
inline Vec3 d_minimizer(const QuadForm3& q3, const Mat2& fpp) {
  static const auto t = detail::completion_in_plane();
  static const auto u = detail::completion_out_of_plane();
  const Mat6& k = q3.matrix();
  const Mat2 a = u.transpose() * k * u;
  const Vec2 b = u.transpose() * k * t * symcoords::of(fpp);
  const double det = a.determinant();
  if (!(det > 1e-14 * a.trace() * a.trace()))
    throw std::domain_error("d_minimizer: singular stationarity system; Q3 is not positive definite");
  Mat2 inv;
  inv << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
  const Vec2 d12 = -(inv * b) / det;
  return {d12(0), d12(1), -0.5 * fpp.trace()};
}

/// Symmetric 3x3 completion of F'' by the minimizing d: [[sym F'', d], [d, -Tr F'']].
inline Mat3 trace_free_completion(const Mat2& fpp, const Vec3& d) {
  Mat3 g;
  const Mat2 s = sym(fpp);
  g << s(0, 0), s(0, 1), d(0), s(1, 0), s(1, 1), d(1), d(0), d(1), 2.0 * d(2);
  return g;
}

inline Mat3 trace_free_completion(const QuadForm3& q3, const Mat2& fpp) {
  return trace_free_completion(fpp, d_minimizer(q3, fpp));
}

/// Q2in(F'') = min over trace-free out-of-plane completions of Q3.
inline double q2in(const QuadForm3& q3, const Mat2& fpp) {
  return q3(trace_free_completion(q3, fpp));
}

/// L2in obtained by polarizing Q2in.
inline LinOp2 l2in_matrix(const QuadForm3& q3) {
  const Mat3 m = polarize<3>([&](const Vec3& c) { return q2in(q3, symcoords::mat2(c)); });
  return LinOp2::from_matrix(m);
}

} // namespace vkplate
