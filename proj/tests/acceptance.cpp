// Acceptance gate: one PASS/FAIL line per criterion; exit status 0 iff all pass.

#include "vkplate/vkplate.hpp"

#include <boost/rational.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace vkplate;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kSeed = 20261015;

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScalarField sincos(const Grid& g, double amp) {
  return ScalarField::sample(g, [&](double x, double y) {
    return amp * std::sin(2 * kPi * x / g.lx) * std::sin(2 * kPi * y / g.ly);
  });
}

// 1. closed-form reduction against brute force
Outcome reduction_equivalence() {
  const auto t0 = Clock::now();
  const Report r = reduction_oracle(50, 20, kSeed, 1e-8);
  const double secs = seconds_since(t0);
  return {r.ok() && secs < 60.0, fmt("worst rel err %.3g over %d cases, %.1f s", r.worst, r.passed + r.failed, secs)};
}

// 2. isotropic closed forms and their lambda-independence
Outcome isotropic_closed_forms() {
  std::mt19937_64 rng(kSeed);
  double worst = 0.0, spread = 0.0;
  for (double mu : {0.5, 1.0, 4.0}) {
    Mat3 want;
    want << 2, 1, 0, 1, 2, 0, 0, 0, 1;
    want *= 2.0 * mu;
    Mat3 first;
    bool have_first = false;
    for (double lambda : {0.0, 1.0, 10.0}) {
      const auto q3 = q3_isotropic(lambda, mu);
      const Mat3 l = l2in_matrix(q3).matrix();
      worst = std::max(worst, (l - want).cwiseAbs().maxCoeff() / (2.0 * mu));
      if (have_first) spread = std::max(spread, (l - first).cwiseAbs().maxCoeff() / (2.0 * mu));
      first = l;
      have_first = true;
      for (int k = 0; k < 50; ++k) {
        const Mat2 f = random_symmetric2(rng);
        const double closed = 2.0 * mu * (f.squaredNorm() + f.trace() * f.trace());
        worst = std::max(worst, std::abs(q2in(q3, f) - closed) / std::max(closed, 1.0));
      }
    }
  }
  return {worst <= 1e-12 && spread <= 1e-12, fmt("max rel err %.3g, lambda spread %.3g", worst, spread)};
}

// 3. density Hessian
Outcome density_hessian() {
  const QuadForm3 h = hessian_fd(Density::w1, 2.0);
  const double err = (h.matrix() - q3_isotropic(2.0, 1.0).matrix()).cwiseAbs().maxCoeff();
  return {err <= 1e-5, fmt("max entry error %.3g", err)};
}

// 4. stress identity and minimizer linearity
Outcome stress_identity() {
  std::mt19937_64 rng(kSeed);
  std::vector<QuadForm3> forms;
  for (double mu : {0.5, 1.0, 4.0})
    for (double lambda : {0.0, 1.0, 10.0}) forms.push_back(q3_isotropic(lambda, mu));
  for (int k = 0; k < 5; ++k) forms.push_back(random_spd_q3(rng));
  int failed = 0, total = 0;
  double worst = 0.0;
  std::uint64_t seed = kSeed;
  for (const auto& q3 : forms) {
    const Report r = stress_identity_harness(q3, 1000, ++seed, 1e-10);
    failed += r.failed;
    total += r.passed + r.failed;
    worst = std::max(worst, r.worst);
  }
  return {failed == 0, fmt("%d/%d trials, worst %.3g", total - failed, total, worst)};
}

// 5. thickness moments with 8-point Gauss-Legendre
Outcome thickness_moments() {
  std::mt19937_64 rng(kSeed + 5);
  std::normal_distribution<double> n01;
  int failed = 0, total = 0;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const QuadForm3 q3 = k % 2 ? random_spd_q3(rng) : q3_isotropic(std::abs(n01(rng)), 0.5 + std::abs(n01(rng)));
    Mat2 g0 = random_symmetric2(rng);
    g0(0, 1) += n01(rng);
    const Report r = moments_check<8>(q3, StrainProfile{g0, random_symmetric2(rng)}, 1e-10);
    failed += r.failed;
    total += r.passed + r.failed;
    worst = std::max(worst, r.worst);
  }
  return {failed == 0, fmt("%d/%d identities, worst %.3g", total - failed, total, worst)};
}

// 6. truncation bounds
Outcome truncation_bounds() {
  bool ok = true;
  std::string detail;
  for (double w : {1.0, 10.0, 1000.0}) {
    const Report r = truncation_suite(Truncation(w));
    double curv = 0.0;
    for (const auto& [k, v] : r.extra)
      if (k == "max_theta_double_prime_times_omega") curv = std::stod(v);
    const bool in_band = curv >= kPi / 2 - 1e-3 && curv <= kPi / 2 * (1.0 + 1e-15);
    ok = ok && r.ok() && in_band;
    detail += fmt("w=%g: %s, max|theta''|w=%.12f; ", w, r.ok() ? "bounds ok" : "bounds FAIL", curv);
  }
  return {ok, detail};
}

// 7. analytic gradient against central differences of the energy
Outcome gradient_correctness() {
  std::mt19937_64 rng(kSeed + 7);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (auto layout : {Layout::periodic, Layout::bounded})
    for (int n : {16, 32}) {
      const Grid g(1.0, 1.0, n, n, layout);
      ScalarField f(g);
      for (int k = 0; k < g.size(); ++k) f.values(k) = n01(rng);
      const PlateProblem p(g, random_spd_q3(rng), f, 0.9);
      VectorField2 w(g);
      ScalarField v(g);
      for (int k = 0; k < 2 * g.size(); ++k) w.values(k) = 0.05 * n01(rng);
      for (int k = 0; k < g.size(); ++k) v.values(k) = 0.05 * n01(rng);
      if (g.periodic()) w.affine << 0.01 * n01(rng), 0.01 * n01(rng), 0.01 * n01(rng), 0.01 * n01(rng);
      const auto grad = energy_gradient(p, w, v);
      const double h = 1e-5;
      for (int k = 0; k < 3 * g.size(); ++k) {
        VectorField2 wp = w, wm = w;
        ScalarField vp = v, vm = v;
        double analytic;
        if (k < 2 * g.size()) {
          wp.values(k) += h;
          wm.values(k) -= h;
          analytic = grad.w.values(k);
        } else {
          vp.values(k - 2 * g.size()) += h;
          vm.values(k - 2 * g.size()) -= h;
          analytic = grad.v.values(k - 2 * g.size());
        }
        const double fd = energy_change(p, wm, vm, wp, vp) / (2 * h);
        worst = std::max(worst, std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-8));
      }
      if (g.periodic())
        for (int a = 0; a < 4; ++a) {
          VectorField2 wp = w, wm = w;
          wp.affine(a / 2, a % 2) += h;
          wm.affine(a / 2, a % 2) -= h;
          const double fd = energy_change(p, wm, v, wp, v) / (2 * h);
          const double analytic = grad.w.affine(a / 2, a % 2);
          worst = std::max(worst, std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-8));
        }
    }
  return {worst <= 1e-6, fmt("max rel err %.3g over every component", worst)};
}

// 8. descent with zero load, and converged residuals with a preset load
Outcome minimization() {
  const Grid g(1.0, 1.0, 32, 32, Layout::periodic);
  const auto q3 = q3_isotropic(1.0, 1.0);
  std::mt19937_64 rng(kSeed + 8);
  std::normal_distribution<double> n01;

  const PlateProblem free_problem(g, q3, ScalarField(g), 1.0);
  ScalarField v0(g);
  for (int k = 0; k < g.size(); ++k) v0.values(k) = 1e-3 * n01(rng);
  v0.values.array() -= v0.values.mean();
  const double e0 = energy(free_problem, solve_membrane(free_problem, v0), v0).total;
  SolverConfig cfg;
  const Solution relax = minimize(free_problem, cfg, InitialState{VectorField2(g), v0});
  bool monotone = true;
  for (std::size_t k = 1; k < relax.trace.size(); ++k) monotone = monotone && relax.trace[k].energy_change <= 0.0;
  const double ratio = relax.energy.total / e0;

  const PlateProblem loaded(g, q3, sincos(g, 500.0), 1.0);
  const Solution sol = minimize(loaded, cfg);
  const bool ok = monotone && ratio < 1e-10 && sol.converged && sol.el_residual_1 <= 1e-8 && sol.el_residual_2 <= 1e-8;
  return {ok, fmt("f=0: %zu steps monotone=%d, E_end/E_0=%.3g; load: converged=%d r1=%.3g r2=%.3g", relax.trace.size() - 1,
                  monotone, ratio, sol.converged, sol.el_residual_1, sol.el_residual_2)};
}

// 9. biharmonic manufactured solution
Outcome biharmonic_order() {
  std::vector<double> errs;
  double slowest = 0.0;
  for (int n : {64, 128, 256}) {
    const Grid g(1.0, 1.0, n, n, Layout::periodic);
    const double k = 2 * kPi, l = 4 * kPi;
    const auto exact = ScalarField::sample(g, [&](double x, double y) { return std::sin(k * x) * std::cos(l * y); });
    ScalarField rhs = exact;
    rhs.values *= std::pow(k * k + l * l, 2);
    const auto t0 = Clock::now();
    const auto u = biharmonic_solve(rhs, g, BiharmonicBc::periodic);
    slowest = std::max(slowest, seconds_since(t0));
    errs.push_back(l2_norm(g, u.values - exact.values));
  }
  const double s1 = std::log2(errs[0] / errs[1]), s2 = std::log2(errs[1] / errs[2]);
  const bool ok = std::abs(s1 - 2.0) <= 0.2 && std::abs(s2 - 2.0) <= 0.2 && slowest < 10.0;
  return {ok, fmt("slopes %.3f, %.3f; slowest solve %.3f s", s1, s2, slowest)};
}

// 10. direct minimization against the Airy route
Outcome cross_route() {
  std::vector<double> diffs;
  for (int n : {64, 128}) {
    const Grid g(1.0, 1.0, n, n, Layout::periodic);
    const auto f = sincos(g, 300.0);
    const PlateProblem p(g, q3_isotropic(1.0, 1.0), f, 1.0);
    const Solution direct = minimize(p, SolverConfig{});
    const AiryState airy = solve_vk(IsotropicParams::incompressible(1.0), f, 1.0, g);
    if (!direct.converged || !airy.converged) return {false, fmt("n=%d: direct converged=%d, airy converged=%d", n, direct.converged, airy.converged)};
    diffs.push_back(l2_norm(g, direct.v.values - airy.v.values) / l2_norm(g, airy.v.values));
  }
  return {diffs[0] <= 5e-2 && diffs[1] < diffs[0], fmt("rel L2 diff %.3g (64^2), %.3g (128^2)", diffs[0], diffs[1])};
}

// 11. incompressible limit
Outcome incompressible_limit() {
  const Grid g(1.0, 1.0, 32, 32, Layout::periodic);
  const auto rows = limit_study(1.0, sincos(g, 300.0), 1.0, g, {0.3, 0.4, 0.45, 0.49, 0.499});
  bool monotone = true, converged = true;
  std::string errs;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0) monotone = monotone && rows[k].v_error < rows[k - 1].v_error;
    converged = converged && rows[k].converged;
    errs += fmt("%.3g ", rows[k].v_error);
  }
  using Q = boost::rational<long long>;
  const Q half(1, 2);
  const bool exact = bending_stiffness_over_mu(half) == Q(1, 3) && half_youngs_over_mu(half) == Q(3, 2);
  return {monotone && converged && exact && rows.size() == 5,
          fmt("||v_nu - v_inc|| = %s; B(1/2)/mu = 1/3 and S(1/2)/(2mu) = 3/2 exact: %d", errs.c_str(), exact)};
}

// 12. recovered displacement in the direct functional
Outcome recovery_consistency() {
  std::vector<double> r1;
  const auto mu1 = IsotropicParams::incompressible(1.0);
  for (int n : {32, 64}) {
    const Grid g(1.0, 1.0, n, n, Layout::periodic);
    const auto f = sincos(g, 300.0);
    const AiryState st = solve_vk(mu1, f, 1.0, g);
    const RecoveredW rec = recover_w(st, mu1, g);
    const PlateProblem p(g, q3_isotropic(1.0, 1.0), f, 1.0);
    r1.push_back(el_residuals(p, rec.w, st.v).r1);
  }
  const double ratio = r1[1] / r1[0];
  return {ratio <= 0.5, fmt("membrane residual %.3g (32^2), %.3g (64^2), ratio %.3f", r1[0], r1[1], ratio)};
}

} // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"reduction oracle equivalence", reduction_equivalence},
      {"isotropic closed forms", isotropic_closed_forms},
      {"density Hessian oracle", density_hessian},
      {"stress identity harness", stress_identity},
      {"thickness moments", thickness_moments},
      {"truncation suite", truncation_bounds},
      {"gradient correctness", gradient_correctness},
      {"minimization", minimization},
      {"biharmonic manufactured solution", biharmonic_order},
      {"cross-route agreement", cross_route},
      {"incompressible limit", incompressible_limit},
      {"w-recovery consistency", recovery_consistency},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
