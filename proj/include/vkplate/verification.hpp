#pragma once

// Independent oracles for the reduced quadratic form: brute-force
// minimization, finite-difference Hessians of model densities, the
// stress identities of trace-free completions and their thickness moments,
// and the smooth saturating truncation.

#include "vkplate/tensor_forms.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vkplate {

/// Outcome of one oracle suite, serialized as key: value lines.
struct Report {
  std::string name;
  std::uint64_t seed = 0;
  int passed = 0;
  int failed = 0;
  double worst = 0.0; // largest normalized error seen
  std::string witness;
  std::vector<std::pair<std::string, std::string>> extra;

  bool ok() const { return failed == 0; }

  void record(bool pass, double err, const std::string& where) {
    pass ? ++passed : ++failed;
    if (err > worst || (!pass && failed == 1)) {
      worst = std::max(worst, err);
      witness = where;
    }
  }

  template <class T>
  void note(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    extra.emplace_back(key, os.str());
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "suite: " << name << "\n"
       << "seed: " << seed << "\n"
       << "passed: " << passed << "\n"
       << "failed: " << failed << "\n"
       << "status: " << (ok() ? "pass" : "fail") << "\n"
       << "worst_error: " << worst << "\n"
       << "worst_witness: " << (witness.empty() ? "none" : witness) << "\n";
    for (const auto& [k, v] : extra) os << k << ": " << v << "\n";
    return os.str();
  }
};

namespace detail {

inline std::string describe(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (int i = 0; i < m.rows(); ++i) {
    if (i) os << "; ";
    for (int j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
  }
  os << "]";
  return os.str();
}

} // namespace detail

// ---------------------------------------------------------------------------
// Truncation

/// theta(t) = t for |t| <= omega, sgn(t) (|t| + omega + (omega/pi) sin(pi (|t| - omega)/omega)) / 2
/// for omega <= |t| <= 2 omega, and sgn(t) 3 omega / 2 beyond. C^1 with bounded curvature.
struct Truncation {
  double omega;

  explicit Truncation(double w) : omega(w) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("Truncation: omega must be positive");
  }

  double theta(double t) const {
    const double a = std::abs(t), s = t < 0 ? -1.0 : 1.0;
    if (a <= omega) return t;
    if (a <= 2.0 * omega)
      return s * 0.5 * (a + omega + omega / std::numbers::pi * std::sin(phase(a)));
    return s * 1.5 * omega;
  }

  double theta_prime(double t) const {
    const double a = std::abs(t);
    if (a <= omega) return 1.0;
    if (a <= 2.0 * omega) return 0.5 * (1.0 + std::cos(phase(a)));
    return 0.0;
  }

  double theta_double_prime(double t) const {
    const double a = std::abs(t), s = t < 0 ? -1.0 : 1.0;
    if (a <= omega || a > 2.0 * omega) return 0.0;
    return -s * std::numbers::pi / (2.0 * omega) * std::sin(phase(a));
  }

private:
  double phase(double a) const { return std::numbers::pi * (a - omega) / omega; }
};

/// Bounds |theta| <= |t|, |theta| <= 3 omega/2, |theta'| <= 1,
/// |theta''| <= pi/(2 omega), monotonicity, and continuity of theta and
/// theta' across the knots |t| = omega, 2 omega.
inline Report truncation_suite(const Truncation& tr, int samples = 200001) {
  if (samples < 3) throw std::invalid_argument("truncation_suite: need at least 3 samples");
  const double w = tr.omega, slack = 1e-14 * w;
  const double curvature_bound = std::numbers::pi / (2.0 * w);
  Report r;
  r.name = "truncation";
  double max_curv = 0.0, prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double t = -3.0 * w + 6.0 * w * k / (samples - 1);
    const double th = tr.theta(t), d1 = tr.theta_prime(t), d2 = tr.theta_double_prime(t);
    max_curv = std::max(max_curv, std::abs(d2));
    auto check = [&](bool pass, double err, const char* what) {
      std::ostringstream os;
      os.precision(17);
      os << what << " at t=" << t;
      r.record(pass, err, os.str());
    };
    check(std::abs(th) <= std::abs(t) + slack, std::max(0.0, std::abs(th) - std::abs(t)) / w, "|theta|<=|t|");
    check(std::abs(th) <= 1.5 * w + slack, std::max(0.0, std::abs(th) - 1.5 * w) / w, "sup bound");
    check(std::abs(d1) <= 1.0 + 1e-15 && d1 >= -1e-15, std::max(0.0, std::abs(d1) - 1.0), "|theta'|<=1");
    check(std::abs(d2) <= curvature_bound * (1.0 + 1e-14), std::max(0.0, std::abs(d2) / curvature_bound - 1.0),
          "|theta''| bound");
    check(th >= prev - slack, std::max(0.0, prev - th) / w, "monotone");
    prev = th;
  }
  for (double knot : {w, 2.0 * w, -w, -2.0 * w}) {
    const double eps = 1e-12 * w;
    const double jump1 = std::abs(tr.theta_prime(knot + eps) - tr.theta_prime(knot - eps));
    const double jump0 = std::abs(tr.theta(knot + eps) - tr.theta(knot - eps)) / w;
    std::ostringstream os;
    os.precision(17);
    os << "knot continuity at t=" << knot;
    r.record(jump1 <= 1e-8 && jump0 <= 1e-8, std::max(jump0, jump1), os.str());
  }
  r.note("omega", w);
  r.note("samples", samples);
  r.note("max_theta_double_prime_times_omega", max_curv * w);
  r.note("sharp_constant", std::numbers::pi / 2.0);
  return r;
}

// ---------------------------------------------------------------------------
// Brute-force reduction

/// Minimum of Q3 over trace-free completions [[sym F'', d], [d, -Tr F'']]
/// by nested 21x21 grid search in (d1, d2), halving the window around the
/// incumbent at each level. Never below the true minimum.
inline double q2in_bruteforce(const QuadForm3& q3, const Mat2& fpp, double radius, int levels) {
  if (!(radius > 0.0)) throw std::invalid_argument("q2in_bruteforce: radius must be positive");
  if (levels < 2) throw std::invalid_argument("q2in_bruteforce: levels must be at least 2");
  constexpr int half = 10;
  const double d3 = -0.5 * fpp.trace();
  Vec2 centre = Vec2::Zero();
  double best = std::numeric_limits<double>::infinity();
  double r = radius;
  for (int level = 0; level < levels; ++level) {
    const double h = r / half;
    Vec2 incumbent = centre;
    int bi = 0, bj = 0;
    for (int i = -half; i <= half; ++i)
      for (int j = -half; j <= half; ++j) {
        const Vec2 d = centre + h * Vec2(i, j);
        const double val = q3(trace_free_completion(fpp, Vec3(d(0), d(1), d3)));
        if (val < best) {
          best = val;
          incumbent = d;
          bi = i;
          bj = j;
        }
      }
    if (level == 0 && (std::abs(bi) == half || std::abs(bj) == half))
      throw std::domain_error("q2in_bruteforce: minimizer on the search boundary; increase radius");
    centre = incumbent;
    r *= 0.5;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Density Hessians

enum class Density { w1, w2 };

/// Model densities W1 = |sqrt(F^T F) - Id|^2 + |log det F|^q and
/// W2 = |sqrt(F^T F) - Id|^2 + |1/det F - 1|^q.
inline double density(Density kind, double q, const Mat3& f) {
  const Eigen::SelfAdjointEigenSolver<Mat3> es(f.transpose() * f);
  const Vec3 ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const Mat3 root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const double det = f.determinant();
  if (!(det > 0.0)) return std::numeric_limits<double>::infinity();
  const double stretch = (root - Mat3::Identity()).squaredNorm();
  const double volumetric = kind == Density::w1 ? std::log(det) : 1.0 / det - 1.0;
  return stretch + std::pow(std::abs(volumetric), q);
}

/// Q3 = D^2 W(Id) in the orthonormal symmetric basis: central second
/// differences with step 1e-4 and one Richardson extrapolation.
inline QuadForm3 hessian_fd(Density kind, double q) {
  if (!(q >= 2.0)) throw std::invalid_argument("hessian_fd: q must be at least 2");
  constexpr double step = 1e-4;
  auto w = [&](const Vec6& c) {
    const double val = density(kind, q, Mat3::Identity() + symcoords::mat3(c));
    if (!std::isfinite(val)) throw std::domain_error("hessian_fd: non-finite density evaluation");
    return val;
  };
  auto second = [&](double h) {
    Mat6 k;
    const double w0 = w(Vec6::Zero());
    for (int a = 0; a < 6; ++a) {
      const Vec6 ea = h * Vec6::Unit(a);
      k(a, a) = (w(ea) - 2.0 * w0 + w(Vec6(-ea))) / (h * h);
      for (int b = a + 1; b < 6; ++b) {
        const Vec6 eb = h * Vec6::Unit(b);
        k(a, b) = (w(Vec6(ea + eb)) - w(Vec6(ea - eb)) - w(Vec6(eb - ea)) + w(Vec6(-ea - eb))) / (4.0 * h * h);
        k(b, a) = k(a, b);
      }
    }
    return k;
  };
  const Mat6 k = (4.0 * second(0.5 * step) - second(step)) / 3.0;
  if (!k.allFinite()) throw std::domain_error("hessian_fd: non-finite Hessian");
  return QuadForm3::from_matrix(Mat6(0.5 * (k + k.transpose())));
}

// ---------------------------------------------------------------------------
// Random forms

/// Symmetric positive definite 6x6 with eigenvalues bounded away from zero.
template <class Rng>
QuadForm3 random_spd_q3(Rng& rng) {
  std::normal_distribution<double> n01;
  Mat6 a;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = n01(rng);
  return QuadForm3::from_matrix(Mat6(a * a.transpose() / 6.0 + 0.5 * Mat6::Identity()));
}

template <class Rng>
Mat2 random_symmetric2(Rng& rng) {
  std::normal_distribution<double> n01;
  Mat2 m;
  m(0, 0) = n01(rng);
  m(1, 1) = n01(rng);
  m(0, 1) = m(1, 0) = n01(rng);
  return m;
}

// ---------------------------------------------------------------------------
// Stress identities of the trace-free completion

/// For random symmetric G'', the stress E = L3(G) of the minimizing
/// completion has E13 = E23 = 0 and L2in(G'') = E'' - E33 Id; the minimizer
/// d is linear in G''.
inline Report stress_identity_harness(const QuadForm3& q3, int trials, std::uint64_t seed, double tol = 1e-10) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const LinOp2 l2 = l2in_matrix(q3);
  Report r;
  r.name = "stress-identity";
  r.seed = seed;
  for (int k = 0; k < trials; ++k) {
    const Mat2 g2 = random_symmetric2(rng);
    const Mat3 g = trace_free_completion(q3, g2);
    const Mat3 e = q3.apply(g);
    const double scale = std::max(e.norm(), 1e-300);
    const double shear = std::hypot(e(0, 2), e(1, 2)) / scale;
    const Mat2 reduced = e.topLeftCorner<2, 2>() - e(2, 2) * Mat2::Identity();
    const double ident = (l2.apply(g2) - reduced).norm() / scale;

    const Mat2 h2 = random_symmetric2(rng);
    const double a = coef(rng), b = coef(rng);
    const Vec3 lhs = d_minimizer(q3, Mat2(a * g2 + b * h2));
    const Vec3 rhs = a * d_minimizer(q3, g2) + b * d_minimizer(q3, h2);
    const double lin = (lhs - rhs).norm() / std::max(rhs.norm(), 1.0);

    const double err = std::max({shear, ident, lin});
    r.record(err <= tol, err, "trial " + std::to_string(k) + " G''=" + detail::describe(g2));
  }
  r.note("trials", trials);
  r.note("tolerance", tol);
  return r;
}

/// Profile G''(x3) = G0 - x3 G1 across the unit thickness.
struct StrainProfile {
  Mat2 g0 = Mat2::Zero();
  Mat2 g1 = Mat2::Zero();
};

/// Thickness moments of E'' - E33 Id over the minimizing completions of a
/// profile, by Gauss-Legendre quadrature on (-1/2, 1/2):
///   int (E'' - E33 Id) = L2in(sym G0),  int x3 (E'' - E33 Id) = -L2in(G1) / 12.
template <int Points = 8>
Report moments_check(const QuadForm3& q3, const StrainProfile& prof, double tol = 1e-10) {
  static_assert(Points >= 8, "moments_check: use at least 8 quadrature points");
  using Rule = boost::math::quadrature::gauss<double, Points>;
  if (!prof.g0.allFinite() || !prof.g1.allFinite()) throw std::invalid_argument("moments_check: non-finite profile");
  if ((prof.g1 - prof.g1.transpose()).norm() > 1e-12 * std::max(prof.g1.norm(), 1.0))
    throw std::invalid_argument("moments_check: G1 must be symmetric");
  const auto& nodes = Rule::abscissa();
  const auto& weights = Rule::weights();
  Mat2 m0 = Mat2::Zero(), m1 = Mat2::Zero();
  auto add = [&](double x3, double wt) {
    const Mat2 g2 = prof.g0 - x3 * prof.g1;
    const Mat3 e = q3.apply(trace_free_completion(q3, g2));
    const Mat2 red = e.topLeftCorner<2, 2>() - e(2, 2) * Mat2::Identity();
    m0 += wt * red;
    m1 += wt * x3 * red;
  };
  // nodes on (-1, 1) mapped to (-1/2, 1/2)
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == 0.0) {
      add(0.0, 0.5 * weights[i]);
      continue;
    }
    add(0.5 * nodes[i], 0.5 * weights[i]);
    add(-0.5 * nodes[i], 0.5 * weights[i]);
  }
  const LinOp2 l2 = l2in_matrix(q3);
  const Mat2 want0 = l2.apply(sym(prof.g0));
  const Mat2 want1 = -l2.apply(prof.g1) / 12.0;
  const double scale = std::max({want0.norm(), want1.norm(), 1.0});
  const double e0 = (m0 - want0).norm() / scale, e1 = (m1 - want1).norm() / scale;
  Report r;
  r.name = "thickness-moments";
  r.note("quad_points", Points);
  const std::string where = "G0=" + detail::describe(prof.g0) + " G1=" + detail::describe(prof.g1);
  r.record(e0 <= tol, e0, "first moment " + where);
  r.record(e1 <= tol, e1, "second moment " + where);
  r.note("first_moment", detail::describe(m0));
  r.note("second_moment", detail::describe(m1));
  return r;
}

// ---------------------------------------------------------------------------
// Aggregate

/// Reduction oracle: closed-form q2in against brute force for random forms
/// and strains.
inline Report reduction_oracle(int forms, int strains, std::uint64_t seed, double tol = 1e-8) {
  std::mt19937_64 rng(seed);
  Report r;
  r.name = "reduction-oracle";
  r.seed = seed;
  for (int i = 0; i < forms; ++i) {
    const QuadForm3 q3 = random_spd_q3(rng);
    for (int j = 0; j < strains; ++j) {
      const Mat2 f = random_symmetric2(rng);
      const double exact = q2in(q3, f);
      const double radius = 8.0 * std::max(f.norm(), 1e-3);
      const double brute = q2in_bruteforce(q3, f, radius, 20);
      const double err = std::abs(exact - brute) / std::max(exact, 1e-12);
      r.record(err <= tol && brute >= exact - 1e-12 * std::max(exact, 1.0), err,
               "form " + std::to_string(i) + " F''=" + detail::describe(f));
    }
  }
  r.note("forms", forms);
  r.note("strains_per_form", strains);
  return r;
}

/// Hessians of both model densities at q = 2 against the isotropic form
/// with mu = 1, lambda = 2, and vanishing on skew matrices.
inline Report density_hessians(double tol = 1e-5) {
  Report r;
  r.name = "density-hessian";
  const Mat6 want = q3_isotropic(2.0, 1.0).matrix();
  for (auto [kind, label] : {std::pair{Density::w1, "W1"}, std::pair{Density::w2, "W2"}}) {
    const QuadForm3 h = hessian_fd(kind, 2.0);
    const double err = (h.matrix() - want).cwiseAbs().maxCoeff();
    r.record(err <= tol, err, std::string(label) + " entrywise");
    Mat3 skew = Mat3::Zero();
    skew(0, 1) = 1.0;
    skew(1, 0) = -1.0;
    skew(0, 2) = 0.5;
    skew(2, 0) = -0.5;
    r.record(std::abs(h(skew)) <= tol, std::abs(h(skew)), std::string(label) + " on skew");
  }
  return r;
}

/// Every oracle suite with one seed: truncations, reduction oracle, density
/// Hessians, stress identities and thickness moments over the isotropic
/// family mu in {0.5, 1, 4}, lambda in {0, 1, 10} and five random forms.
inline std::vector<Report> verify_all(std::uint64_t seed, int trials = 1000) {
  std::vector<Report> out;
  for (double w : {1.0, 10.0, 1000.0}) out.push_back(truncation_suite(Truncation(w)));
  out.push_back(reduction_oracle(50, 20, seed));
  out.push_back(density_hessians());

  std::vector<std::pair<std::string, QuadForm3>> forms;
  for (double mu : {0.5, 1.0, 4.0})
    for (double lambda : {0.0, 1.0, 10.0}) {
      std::ostringstream os;
      os << "isotropic mu=" << mu << " lambda=" << lambda;
      forms.emplace_back(os.str(), q3_isotropic(lambda, mu));
    }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int i = 0; i < 5; ++i) forms.emplace_back("random form " + std::to_string(i), random_spd_q3(rng));

  Report stress, moments;
  stress.name = "stress-identity";
  moments.name = "thickness-moments";
  stress.seed = moments.seed = seed;
  std::uint64_t sub = seed;
  for (const auto& [label, q3] : forms) {
    const Report s = stress_identity_harness(q3, trials, ++sub);
    stress.passed += s.passed;
    stress.failed += s.failed;
    if (s.worst >= stress.worst) {
      stress.worst = s.worst;
      stress.witness = label + ": " + s.witness;
    }
    for (int k = 0; k < 20; ++k) {
      Mat2 skew = Mat2::Zero();
      skew(0, 1) = std::normal_distribution<double>()(rng);
      skew(1, 0) = -skew(0, 1);
      const StrainProfile prof{random_symmetric2(rng) + skew, random_symmetric2(rng)};
      const Report m = moments_check(q3, prof);
      moments.passed += m.passed;
      moments.failed += m.failed;
      if (m.worst >= moments.worst) {
        moments.worst = m.worst;
        moments.witness = label + ": " + m.witness;
      }
    }
  }
  stress.note("forms", forms.size());
  stress.note("trials_per_form", trials);
  moments.note("forms", forms.size());
  moments.note("profiles_per_form", 20);
  out.push_back(stress);
  out.push_back(moments);
  return out;
}

} // namespace vkplate
