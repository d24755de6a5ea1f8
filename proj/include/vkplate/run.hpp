#pragma once

// Command dispatch: runs one configured route and writes its artifacts
// (field CSVs, trace, summary.txt) into an output directory.

#include "vkplate/airy_vk.hpp"
#include "vkplate/config.hpp"
#include "vkplate/field_io.hpp"
#include "vkplate/plate_energy.hpp"
#include "vkplate/solver.hpp"
#include "vkplate/verification.hpp"

#include <boost/rational.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace vkplate {

/// Ordered key: value lines.
class Summary {
public:
  template <class T>
  void add(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    lines_.emplace_back(key, os.str());
  }
  void add(const std::string& key, bool value) { lines_.emplace_back(key, value ? "true" : "false"); }

  void write(std::ostream& os, const RunConfig& cfg) const {
    for (const auto& [k, v] : lines_) os << k << ": " << v << "\n";
    os << "config: |\n";
    std::istringstream src(cfg.source);
    for (std::string line; std::getline(src, line);) os << "  " << line << "\n";
  }

private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

namespace detail {

inline std::string matrix_text(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << "\n";
  }
  return os.str();
}

// single-line form for summary.txt: rows separated by "; "
inline std::string matrix_inline(const Eigen::MatrixXd& m) {
  std::string text = matrix_text(m);
  text.pop_back();
  for (std::size_t at; (at = text.find('\n')) != std::string::npos;) text.replace(at, 1, "; ");
  return text;
}

inline void common_header(Summary& s, const RunConfig& cfg) {
  s.add("command", to_string(cfg.command));
  s.add("seed", cfg.seed);
}

inline void grid_header(Summary& s, const RunConfig& cfg) {
  s.add("grid", cfg.grid().describe());
  s.add("bc", to_string(cfg.bc));
  s.add("r33", cfg.r33);
}

inline int run_solve(const RunConfig& cfg, const std::filesystem::path& out, Summary& s, std::ostream& log) {
  const Grid g = cfg.grid();
  const ScalarField f = make_force(cfg);
  const PlateProblem p(g, cfg.material.q3, f, cfg.r33);
  for (const auto& w : p.warnings()) log << "warning: " << w << "\n";

  SolverConfig sc = cfg.solver;
  sc.trace_path = (out / "trace.csv").string();
  std::optional<InitialState> init;
  if (cfg.init_noise > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> n01;
    const PlateWorkspace ws(p);
    ScalarField v = bending_response(ws);
    v.values *= sc.init_scale;
    for (int k = 0; k < g.size(); ++k) v.values(k) += cfg.init_noise * n01(rng);
    init = InitialState{VectorField2(g), v};
  }
  const Solution sol = minimize(p, sc, init);

  save_field((out / "v.csv").string(), sol.v);
  save_field((out / "w.csv").string(), sol.w);
  save_field((out / "force.csv").string(), p.force());

  s.add("l2in_matrix", matrix_inline(p.material().matrix()));
  s.add("energy_membrane", sol.energy.membrane);
  s.add("energy_bending", sol.energy.bending);
  s.add("energy_load", sol.energy.load);
  s.add("energy_total", sol.energy.total);
  s.add("residual_membrane", sol.el_residual_1);
  s.add("residual_bending", sol.el_residual_2);
  s.add("iterations", sol.iterations);
  s.add("converged", sol.converged);
  s.add("message", sol.message);
  s.add("load_shift", p.load_shift());
  for (const auto& w : p.warnings()) s.add("warning", w);
  log << "solve: " << sol.message << " after " << sol.iterations << " iterations, energy " << sol.energy.total
      << "\n";
  return sol.converged ? 0 : 1;
}

inline IsotropicParams airy_params(const RunConfig& cfg) {
  return cfg.airy_model == AiryModel::incompressible
             ? IsotropicParams::incompressible(cfg.material.mu)
             : IsotropicParams::from_lame(cfg.material.mu, cfg.material.lambda);
}

inline int run_airy(const RunConfig& cfg, const std::filesystem::path& out, Summary& s, std::ostream& log) {
  const Grid g = cfg.grid();
  ScalarField f = make_force(cfg);
  if (g.periodic()) f.values.array() -= mean(g, f.values);
  const IsotropicParams params = airy_params(cfg);
  s.add("model", cfg.airy_model == AiryModel::incompressible ? "incompressible" : "compressible");
  s.add("mu", params.mu);
  s.add("nu", params.nu);

  AiryState st;
  try {
    st = cfg.airy_model == AiryModel::incompressible ? solve_vk(params, f, cfg.r33, g, cfg.airy)
                                                     : solve_compressible_vk(params, f, cfg.r33, g, cfg.airy);
  } catch (const DivergenceError& e) {
    s.add("converged", false);
    s.add("message", e.what());
    s.add("iterations", e.history.size());
    log << "airy: " << e.what() << "\n";
    return 1;
  }
  {
    std::ofstream h(out / "history.csv");
    h << "iter,residual\n";
    h.precision(17);
    for (std::size_t k = 0; k < st.history.size(); ++k) h << k << "," << st.history[k] << "\n";
  }
  save_field((out / "v.csv").string(), st.v);
  save_field((out / "phi1.csv").string(), st.phi1);

  s.add("iterations", st.iterations);
  s.add("residual_v", st.residual_v);
  s.add("residual_phi", st.residual_phi);
  s.add("converged", st.converged);
  if (cfg.airy_model == AiryModel::incompressible) {
    const RecoveredW rec = recover_w(st, params, g);
    save_field((out / "w.csv").string(), rec.w);
    s.add("recovery_misfit", rec.misfit);
    if (g.periodic()) {
      const PlateProblem p(g, cfg.material.q3, f, cfg.r33);
      const auto el = el_residuals(p, rec.w, st.v);
      s.add("direct_residual_membrane", el.r1);
      s.add("direct_residual_bending", el.r2);
      s.add("direct_energy_total", energy(p, rec.w, st.v).total);
    }
  }
  log << "airy: " << (st.converged ? "converged" : "not converged") << " after " << st.iterations
      << " iterations, residual " << st.residual_v << "\n";
  return st.converged ? 0 : 1;
}

inline int run_limit_study(const RunConfig& cfg, const std::filesystem::path& out, Summary& s, std::ostream& log) {
  const Grid g = cfg.grid();
  ScalarField f = make_force(cfg);
  if (g.periodic()) f.values.array() -= mean(g, f.values);
  const double mu = cfg.material.mu;
  std::vector<LimitRow> rows;
  try {
    rows = limit_study(mu, f, cfg.r33, g, cfg.nu_list, cfg.airy);
  } catch (const DivergenceError& e) {
    s.add("converged", false);
    s.add("message", e.what());
    log << "limit-study: " << e.what() << "\n";
    return 1;
  }
  std::ofstream t(out / "limit_study.csv");
  t.precision(17);
  t << "nu,B,S_half,v_error,phi_error,converged\n";
  bool all_converged = true, monotone = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    t << r.nu << "," << r.bending_stiffness << "," << r.half_youngs << "," << r.v_error << "," << r.phi_error
      << "," << (r.converged ? 1 : 0) << "\n";
    all_converged = all_converged && r.converged;
    if (k > 0 && rows[k].nu > rows[k - 1].nu && !(r.v_error < rows[k - 1].v_error)) monotone = false;
  }
  using Q = boost::rational<long long>;
  const Q half(1, 2);
  const Q b = bending_stiffness_over_mu(half), sh = half_youngs_over_mu(half);
  s.add("rows", rows.size());
  s.add("v_error_monotone", monotone);
  s.add("bending_stiffness_limit_over_mu", std::to_string(b.numerator()) + "/" + std::to_string(b.denominator()));
  s.add("half_youngs_limit_over_mu", std::to_string(sh.numerator()) + "/" + std::to_string(sh.denominator()));
  s.add("limit_identities_exact", b == Q(1, 3) && sh == Q(3, 2));
  s.add("converged", all_converged);
  log << "limit-study: " << rows.size() << " rows, monotone " << (monotone ? "yes" : "no") << "\n";
  return all_converged ? 0 : 1;
}

inline int run_verify(const RunConfig& cfg, const std::filesystem::path& out, Summary& s, std::ostream& log) {
  const auto reports = verify_all(cfg.seed, cfg.trials);
  std::ofstream r(out / "verify_report.txt");
  int failed = 0;
  for (const auto& rep : reports) {
    r << rep.to_text() << "\n";
    s.add("suite_" + rep.name, rep.ok() ? "pass" : "fail");
    log << rep.name << ": " << (rep.ok() ? "pass" : "FAIL") << " (" << rep.passed << " passed, " << rep.failed
        << " failed, worst " << rep.worst << ")\n";
    if (!rep.ok()) ++failed;
  }
  s.add("suites", reports.size());
  s.add("suites_failed", failed);
  return failed == 0 ? 0 : 1;
}

inline int run_q2in(const RunConfig& cfg, const std::filesystem::path& out, Summary& s, std::ostream& log) {
  const LinOp2 l2 = l2in_matrix(cfg.material.q3);
  const std::string text = matrix_text(l2.matrix());
  log << "L2in in the basis (11, 22, sqrt2*12):\n" << text;
  std::ofstream(out / "q2in.txt") << "# basis: 11 22 sqrt2*12\n" << text;
  s.add("basis", "11 22 sqrt2*12");
  s.add("l2in_matrix", matrix_inline(l2.matrix()));
  return 0;
}

} // namespace detail

/// Runs a validated configuration; returns the process exit status
/// (0 iff the route converged or every check passed).
inline int run(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
  std::filesystem::create_directories(out_dir);
  Summary s;
  detail::common_header(s, cfg);
  int status = 1;
  switch (cfg.command) {
    case Command::solve:
      detail::grid_header(s, cfg);
      status = detail::run_solve(cfg, out_dir, s, log);
      break;
    case Command::airy:
      detail::grid_header(s, cfg);
      status = detail::run_airy(cfg, out_dir, s, log);
      break;
    case Command::limit_study:
      detail::grid_header(s, cfg);
      status = detail::run_limit_study(cfg, out_dir, s, log);
      break;
    case Command::verify: status = detail::run_verify(cfg, out_dir, s, log); break;
    case Command::q2in: status = detail::run_q2in(cfg, out_dir, s, log); break;
  }
  s.add("exit_status", status);
  std::ofstream os(out_dir / "summary.txt");
  s.write(os, cfg);
  if (!os) throw std::runtime_error("cannot write summary.txt");
  return status;
}

} // namespace vkplate
