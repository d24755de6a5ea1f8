#include "vkplate/tensor_forms.hpp"
#include "vkplate/verification.hpp"

#include <catch2/catch.hpp>

#include <random>
#include <sstream>

using namespace vkplate;
using Catch::Matchers::Contains;

namespace {

Mat2 sample_strain(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Mat2 m;
  m << n(rng), n(rng), n(rng), n(rng);
  return m;
}

} // namespace

TEST_CASE("symmetric coordinates are orthonormal", "[tensor_forms]") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const Mat2 a = sym(sample_strain(rng)), b = sym(sample_strain(rng));
    CHECK(symcoords::of(a).dot(symcoords::of(b)) == Approx(frobenius(a, b)).margin(1e-14));
    CHECK((symcoords::mat2(symcoords::of(a)) - a).norm() < 1e-15);
  }
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(frobenius(symcoords::basis3(i), symcoords::basis3(j)) == Approx(i == j ? 1.0 : 0.0).margin(1e-15));
}

TEST_CASE("isotropic reduction: the worked example", "[tensor_forms]") {
  // lambda = 5, mu = 1, F'' = Id: the completion diag(1, 1, -2) gives 2 * (2 + 4)
  const auto q3 = q3_isotropic(5.0, 1.0);
  CHECK(q2in(q3, Mat2::Identity()) == Approx(12.0).epsilon(1e-14));
  const Vec3 d = d_minimizer(q3, Mat2::Identity());
  CHECK(d.head<2>().norm() < 1e-14);
  CHECK(d(2) == Approx(-1.0));
  const Mat3 g = trace_free_completion(q3, Mat2::Identity());
  CHECK(std::abs(g.trace()) < 1e-15);
  CHECK(g(2, 2) == Approx(-2.0));
}

TEST_CASE("isotropic closed forms are independent of lambda", "[tensor_forms]") {
  std::mt19937_64 rng(2);
  for (double mu : {0.5, 1.0, 4.0})
    for (double lambda : {0.0, 1.0, 10.0}) {
      const auto q3 = q3_isotropic(lambda, mu);
      Mat3 want;
      want << 2, 1, 0, 1, 2, 0, 0, 0, 1;
      want *= 2.0 * mu;
      CHECK((l2in_matrix(q3).matrix() - want).cwiseAbs().maxCoeff() < 1e-12 * mu);
      for (int k = 0; k < 10; ++k) {
        const Mat2 f = sample_strain(rng);
        const Mat2 s = sym(f);
        const double closed = 2.0 * mu * (s.squaredNorm() + f.trace() * f.trace());
        CHECK(q2in(q3, f) == Approx(closed).epsilon(1e-12).margin(1e-12));
        const Mat2 lf = 2.0 * mu * (s + f.trace() * Mat2::Identity());
        CHECK((l2in_matrix(q3).apply(f) - lf).norm() < 1e-12 * std::max(1.0, lf.norm()));
      }
    }
}

TEST_CASE("the minimizing completion beats every other admissible completion", "[tensor_forms]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int k = 0; k < 20; ++k) {
    const auto q3 = random_spd_q3(rng);
    const Mat2 f = sample_strain(rng);
    const double best = q2in(q3, f);
    const Vec3 d = d_minimizer(q3, f);
    CHECK(d(2) == Approx(-0.5 * f.trace()));
    for (int t = 0; t < 20; ++t) {
      const Vec3 other(d(0) + n(rng), d(1) + n(rng), d(2));
      CHECK(q3(trace_free_completion(f, other)) >= best - 1e-12);
    }
  }
}

TEST_CASE("L2in is symmetric positive definite and polarizes Q2in", "[tensor_forms]") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const auto q3 = random_spd_q3(rng);
    const Mat3 l = l2in_matrix(q3).matrix();
    CHECK((l - l.transpose()).norm() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat3>(l).eigenvalues().minCoeff() > 0.0);
    const Mat2 f = sample_strain(rng);
    CHECK(l2in_matrix(q3)(f) == Approx(q2in(q3, f)).epsilon(1e-12));
  }
}

TEST_CASE("brute force never undercuts the closed form", "[tensor_forms]") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 5; ++k) {
    const auto q3 = random_spd_q3(rng);
    const Mat2 f = random_symmetric2(rng);
    const double exact = q2in(q3, f);
    const double brute = q2in_bruteforce(q3, f, 8.0 * f.norm(), 20);
    CHECK(brute >= exact - 1e-12 * exact);
    CHECK(std::abs(brute - exact) <= 1e-8 * exact);
  }
}

TEST_CASE("QuadForm3 validation", "[tensor_forms]") {
  Mat6 k = Mat6::Identity();
  k(5, 5) = -1.0;
  CHECK_THROWS_WITH(QuadForm3::from_matrix(k), Contains("eigenvalue"));
  Mat6 asym = Mat6::Identity();
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(QuadForm3::from_matrix(asym), std::invalid_argument);
  CHECK_THROWS_AS(q3_isotropic(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(q3_isotropic(-1.0, 1.0), std::invalid_argument);
  CHECK_NOTHROW(q3_isotropic(0.0, 1.0));
}

TEST_CASE("matrix files parse in the documented basis", "[tensor_forms]") {
  const auto iso = q3_isotropic(2.0, 1.5);
  std::ostringstream os;
  os.precision(17);
  os << "# isotropic lambda = 2, mu = 1.5\n";
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) os << iso.matrix()(i, j) << ' ';
    os << "\n";
  }
  std::istringstream is(os.str());
  CHECK((read_quadform3(is).matrix() - iso.matrix()).norm() == 0.0);

  std::istringstream short_file("1 2 3");
  CHECK_THROWS_WITH(read_quadform3(short_file), Contains("36"));
  std::istringstream junk("1 x 3");
  CHECK_THROWS_WITH(read_quadform3(junk), Contains("bad number"));
}

TEST_CASE("zero strain reduces to zero", "[tensor_forms]") {
  const auto q3 = q3_isotropic(1.0, 1.0);
  CHECK(q2in(q3, Mat2::Zero()) == 0.0);
  CHECK(d_minimizer(q3, Mat2::Zero()).norm() == 0.0);
  CHECK(q2in_bruteforce(q3, Mat2::Zero(), 1.0, 4) == 0.0);
}
