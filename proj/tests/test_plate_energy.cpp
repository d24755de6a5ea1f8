#include "vkplate/plate_energy.hpp"
#include "vkplate/verification.hpp"

#include <catch2/catch.hpp>

#include <numbers>
#include <random>

using namespace vkplate;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField random_field(const Grid& g, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n;
  ScalarField f(g);
  for (int k = 0; k < g.size(); ++k) f.values(k) = scale * n(rng);
  return f;
}

VectorField2 random_displacement(const Grid& g, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n;
  VectorField2 w(g);
  for (int k = 0; k < 2 * g.size(); ++k) w.values(k) = scale * n(rng);
  if (g.periodic()) w.affine << scale * n(rng), scale * n(rng), scale * n(rng), scale * n(rng);
  return w;
}

// Largest error of the analytic gradient against central differences of the
// energy, relative to the largest gradient entry.
double gradient_error(const PlateProblem& p, const VectorField2& w, const ScalarField& v, std::mt19937_64& rng,
                      int probes) {
  const auto g = energy_gradient(p, w, v);
  const int n = p.grid().size();
  const double gscale = std::max(g.w.values.cwiseAbs().maxCoeff(), g.v.values.cwiseAbs().maxCoeff());
  const double h = 1e-5;
  double worst = 0.0;
  std::uniform_int_distribution<int> pick(0, 3 * n - 1);
  for (int t = 0; t < probes; ++t) {
    const int k = pick(rng);
    VectorField2 wp = w, wm = w;
    ScalarField vp = v, vm = v;
    double analytic = 0.0;
    if (k < 2 * n) {
      wp.values(k) += h;
      wm.values(k) -= h;
      analytic = g.w.values(k);
    } else {
      vp.values(k - 2 * n) += h;
      vm.values(k - 2 * n) -= h;
      analytic = g.v.values(k - 2 * n);
    }
    const double fd = energy_change(p, wm, vm, wp, vp) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - analytic) / gscale);
  }
  if (p.grid().periodic()) {
    for (int a = 0; a < 4; ++a) {
      VectorField2 wp = w, wm = w;
      wp.affine(a / 2, a % 2) += h;
      wm.affine(a / 2, a % 2) -= h;
      const double fd = energy_change(p, wm, v, wp, v) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g.w.affine(a / 2, a % 2)) / gscale);
    }
  }
  return worst;
}

} // namespace

TEST_CASE("energy gradient matches central differences", "[plate_energy]") {
  std::mt19937_64 rng(11);
  for (auto layout : {Layout::periodic, Layout::bounded})
    for (int n : {16, 32}) {
      const Grid g(1.0, 1.3, n, n, layout);
      const auto q3 = random_spd_q3(rng);
      const PlateProblem p(g, q3, random_field(g, rng, 1.0), 0.7);
      const auto w = random_displacement(g, rng, 0.05);
      const auto v = random_field(g, rng, 0.05);
      CHECK(gradient_error(p, w, v, rng, 200) <= 1e-6);
    }
}

TEST_CASE("energy_change agrees with the difference of totals", "[plate_energy]") {
  std::mt19937_64 rng(12);
  const Grid g(1.0, 1.0, 16, 16, Layout::periodic);
  const PlateProblem p(g, q3_isotropic(1.0, 1.0), random_field(g, rng, 1.0), 1.0);
  const auto w0 = random_displacement(g, rng, 0.1), w1 = random_displacement(g, rng, 0.1);
  const auto v0 = random_field(g, rng, 0.1), v1 = random_field(g, rng, 0.1);
  const double direct = energy(p, w1, v1).total - energy(p, w0, v0).total;
  CHECK(energy_change(p, w0, v0, w1, v1) == Approx(direct).epsilon(1e-10));
  CHECK(energy_change(p, w0, v0, w0, v0) == 0.0);
}

TEST_CASE("energy parts on exactly represented fields", "[plate_energy]") {
  const auto q3 = q3_isotropic(2.0, 1.0);
  const LinOp2 l2 = l2in_matrix(q3);

  SECTION("quadratic deflection on a bounded grid") {
    // v = x^2 / 2 has Hessian diag(1, 0) everywhere, one-sided stencils included
    const Grid g(2.0, 1.0, 9, 7, Layout::bounded);
    const PlateProblem p(g, q3, ScalarField(g), 1.0);
    const auto v = ScalarField::sample(g, [](double x, double) { return 0.5 * x * x; });
    Mat2 h = Mat2::Zero();
    h(0, 0) = 1.0;
    CHECK(energy(p, VectorField2(g), v).bending == Approx(g.area() * l2(h) / 24.0).epsilon(1e-12));
    const auto hv = bending_strain(v, g);
    CHECK((hv.xx.array() - 1.0).abs().maxCoeff() < 1e-10);
    CHECK(hv.xy.cwiseAbs().maxCoeff() < 1e-10);
  }

  SECTION("mean strain on a periodic grid") {
    const Grid g(1.0, 1.0, 8, 8, Layout::periodic);
    const PlateProblem p(g, q3, ScalarField(g), 1.0);
    VectorField2 w(g);
    w.affine << 0.1, 0.3, -0.1, 0.2;
    const auto e = energy(p, w, ScalarField(g));
    CHECK(e.membrane == Approx(0.5 * g.area() * l2(sym(w.affine))).epsilon(1e-12));
    CHECK(e.bending == 0.0);
  }

  SECTION("rigid motions carry no membrane energy") {
    const Grid g(1.0, 1.0, 10, 10, Layout::bounded);
    const PlateProblem p(g, q3, ScalarField(g), 1.0);
    const auto w = VectorField2::sample(g, [](double x, double y) { return Vec2(0.3 - 0.2 * y, -1.0 + 0.2 * x); });
    CHECK(energy(p, w, ScalarField(g)).membrane < 1e-28);
  }

  SECTION("zero state") {
    const Grid g(1.0, 1.0, 8, 8, Layout::periodic);
    const auto f = ScalarField::sample(g, [](double x, double y) { return std::sin(2 * kPi * x) * std::cos(2 * kPi * y); });
    const PlateProblem p(g, q3, f, 1.0);
    const auto e = energy(p, VectorField2(g), ScalarField(g));
    CHECK(e.total == 0.0);
  }
}

TEST_CASE("load normalization and validation", "[plate_energy]") {
  const Grid g(1.0, 1.0, 8, 8, Layout::periodic);
  const auto q3 = q3_isotropic(1.0, 1.0);
  const auto f = ScalarField::sample(g, [](double x, double) { return 1.0 + std::sin(2 * kPi * x); });
  const PlateProblem p(g, q3, f, 1.0);
  CHECK(p.load_shift() == Approx(1.0));
  CHECK(std::abs(mean(g, p.force().values)) < 1e-15);
  REQUIRE(p.warnings().size() == 1);

  const auto zero_mean = ScalarField::sample(g, [](double x, double) { return std::sin(2 * kPi * x); });
  CHECK(PlateProblem(g, q3, zero_mean, 1.0).warnings().empty());

  CHECK_THROWS_AS(PlateProblem(g, q3, zero_mean, 1.5), std::invalid_argument);
  const Grid other(1.0, 1.0, 10, 8, Layout::periodic);
  CHECK_THROWS_AS(PlateProblem(other, q3, zero_mean, 1.0), GridMismatch);
  const PlateProblem ok(g, q3, zero_mean, 1.0);
  CHECK_THROWS_AS(energy(ok, VectorField2(other), ScalarField(g)), GridMismatch);
  ScalarField bad = zero_mean;
  bad.values(3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(PlateProblem(g, q3, bad, 1.0), std::invalid_argument);
}

TEST_CASE("grids validate their shape", "[plate_energy]") {
  CHECK_THROWS_AS(Grid(1.0, 1.0, 3, 8, Layout::periodic), std::invalid_argument);
  CHECK_THROWS_AS(Grid(0.0, 1.0, 8, 8, Layout::periodic), std::invalid_argument);
  const Grid g(2.0, 1.0, 8, 4, Layout::periodic);
  CHECK(g.weights().sum() == Approx(g.area()));
  const Grid b(2.0, 1.0, 9, 5, Layout::bounded);
  CHECK(b.weights().sum() == Approx(b.area()));
}
