#include "vkplate/verification.hpp"

#include <catch2/catch.hpp>

#include <numbers>
#include <random>

using namespace vkplate;
using Catch::Matchers::Contains;

TEST_CASE("truncation values at the knots", "[verification]") {
  const double pi = std::numbers::pi;
  for (double w : {1.0, 10.0, 1000.0}) {
    const Truncation tr(w);
    CHECK(tr.theta(w) == Approx(w));
    CHECK(tr.theta(2.0 * w) == Approx(1.5 * w));
    CHECK(tr.theta(1.5 * w) == Approx(w * (1.25 + 1.0 / (2.0 * pi))));
    CHECK(tr.theta(5.0 * w) == 1.5 * w);
    CHECK(tr.theta_prime(w) == 1.0);
    CHECK(tr.theta_prime(2.0 * w) == Approx(0.0).margin(1e-15));
    CHECK(std::abs(tr.theta_double_prime(1.5 * w)) == Approx(pi / (2.0 * w)));
  }
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> t(-5.0, 5.0);
  const Truncation tr(1.3);
  for (int k = 0; k < 100; ++k) {
    const double x = t(rng);
    CHECK(tr.theta(-x) == -tr.theta(x));
    CHECK(tr.theta_prime(-x) == tr.theta_prime(x));
  }
  CHECK_THROWS_AS(Truncation(0.0), std::invalid_argument);
}

TEST_CASE("truncation suite passes with the sharp curvature constant", "[verification]") {
  for (double w : {1.0, 10.0, 1000.0}) {
    const auto r = truncation_suite(Truncation(w));
    CHECK(r.ok());
    CHECK(r.failed == 0);
  }
  const auto text = truncation_suite(Truncation(1.0), 1001).to_text();
  CHECK_THAT(text, Contains("status: pass"));
  CHECK_THAT(text, Contains("max_theta_double_prime_times_omega"));
}

TEST_CASE("brute-force reduction", "[verification]") {
  const auto iso = q3_isotropic(3.0, 1.0);
  SECTION("error shrinks geometrically with the level") {
    Mat6 k = q3_isotropic(1.0, 1.0).matrix();
    k(4, 0) = k(0, 4) = 0.7; // moves the minimizer off the search lattice
    const auto q3 = QuadForm3::from_matrix(k);
    const Mat2 f = Mat2::Identity();
    const double exact = q2in(q3, f);
    std::vector<double> err;
    for (int levels = 2; levels <= 14; ++levels) err.push_back(q2in_bruteforce(q3, f, 1.0, levels) - exact);
    for (double e : err) CHECK(e >= -1e-12);
    for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] <= err[i - 1]);
    const double rate = std::pow(err.front() / err.back(), 1.0 / (err.size() - 1));
    CHECK(rate >= 2.5); // stepwise, about fourfold on average
    CHECK(q2in_bruteforce(iso, Mat2::Identity(), 0.37, 6) == Approx(12.0).epsilon(1e-12));
  }
  SECTION("a radius that is too small is detected") {
    const auto q3 = q3_isotropic(1.0, 1.0);
    Mat6 k = q3.matrix();
    k(4, 0) = k(0, 4) = 1.5; // couples 13 to 11, pushing d1 away from zero
    const auto skewed = QuadForm3::from_matrix(k);
    Mat2 f = Mat2::Zero();
    f(0, 0) = 10.0;
    CHECK_THROWS_AS(q2in_bruteforce(skewed, f, 1e-3, 4), std::domain_error);
  }
  CHECK_THROWS_AS(q2in_bruteforce(iso, Mat2::Identity(), 1.0, 1), std::invalid_argument);
}

TEST_CASE("reduction oracle on random forms", "[verification]") {
  const auto r = reduction_oracle(10, 10, 77);
  CHECK(r.ok());
  CHECK(r.seed == 77);
}

TEST_CASE("density Hessians", "[verification]") {
  const auto want = q3_isotropic(2.0, 1.0).matrix();
  for (auto kind : {Density::w1, Density::w2}) {
    const auto h = hessian_fd(kind, 2.0);
    CHECK((h.matrix() - want).cwiseAbs().maxCoeff() <= 1e-5);
    CHECK((h.matrix() - h.matrix().transpose()).norm() < 1e-12);
  }
  CHECK(density(Density::w1, 2.0, Mat3::Identity()) == 0.0);
  CHECK(density_hessians().ok());
  CHECK_THROWS_AS(hessian_fd(Density::w1, 1.5), std::invalid_argument);
}

TEST_CASE("stress identity of the trace-free completion", "[verification]") {
  SECTION("isotropic worked example") {
    const double mu = 1.7;
    const auto q3 = q3_isotropic(4.0, mu);
    const Mat3 g = trace_free_completion(q3, Mat2::Identity());
    Mat3 want_g = Mat3::Zero();
    want_g.diagonal() << 1.0, 1.0, -2.0;
    CHECK((g - want_g).norm() < 1e-14);
    const Mat3 e = q3.apply(g);
    CHECK((e - 2.0 * mu * want_g).norm() < 1e-12);
    const Mat2 reduced = e.topLeftCorner<2, 2>() - e(2, 2) * Mat2::Identity();
    CHECK((reduced - 6.0 * mu * Mat2::Identity()).norm() < 1e-12);
  }
  SECTION("random forms") {
    std::mt19937_64 rng(32);
    for (int k = 0; k < 5; ++k) {
      const auto r = stress_identity_harness(random_spd_q3(rng), 200, 100 + k);
      CHECK(r.ok());
    }
  }
}

TEST_CASE("thickness moments", "[verification]") {
  const auto iso = q3_isotropic(1.0, 1.0);
  SECTION("pure curvature") {
    const auto r = moments_check(iso, StrainProfile{Mat2::Zero(), Mat2::Identity()});
    CHECK(r.ok());
  }
  SECTION("pure stretch has no second moment") {
    Mat2 g0;
    g0 << 0.3, 0.4, -0.1, 0.2;
    const auto r = moments_check(iso, StrainProfile{g0, Mat2::Zero()});
    CHECK(r.ok());
  }
  SECTION("random profiles and forms") {
    std::mt19937_64 rng(33);
    for (int k = 0; k < 20; ++k) {
      const StrainProfile p{random_symmetric2(rng), random_symmetric2(rng)};
      CHECK(moments_check<10>(random_spd_q3(rng), p).ok());
    }
  }
  Mat2 asym = Mat2::Zero();
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(moments_check(iso, StrainProfile{Mat2::Zero(), asym}), std::invalid_argument);
}

TEST_CASE("reports carry the seed and witnesses", "[verification]") {
  const auto r = stress_identity_harness(q3_isotropic(1.0, 1.0), 10, 4242);
  const auto text = r.to_text();
  CHECK_THAT(text, Contains("seed: 4242"));
  CHECK_THAT(text, Contains("worst_witness: trial"));
  CHECK_THAT(text, Contains("passed: 10"));
}
