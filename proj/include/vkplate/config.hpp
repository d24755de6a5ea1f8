#pragma once

// Run configuration: a YAML document whose top-level mappings act as
// sections. Every key is checked against the known set; unknown keys, type
// mismatches and missing required keys are reported with line and column.
//
//   command: solve            # solve | airy | limit-study | verify | q2in
//   seed: 7
//   domain:   {lx: 1, ly: 1}
//   grid:     {nx: 32, ny: 32, bc: periodic}          # periodic | free | clamped
//   material: {type: isotropic, lambda: 1, mu: 1}     # or {type: matrix, file: q3.txt}
//   force:    {preset: sincos, amplitude: 1}          # or {file: f.csv}
//   r33: 1
//   solver:   {max_outer: 500, tol_grad: 1e-9, ...}
//   airy:     {model: incompressible, alpha: 0.7, tol: 1e-10, max_iter: 2000}
//   limit_study: {nu: [0.3, 0.4, 0.45]}
//   verify:   {trials: 1000}

#include "vkplate/airy_vk.hpp"
#include "vkplate/field_io.hpp"
#include "vkplate/grid.hpp"
#include "vkplate/solver.hpp"
#include "vkplate/tensor_forms.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vkplate {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Command { solve, airy, limit_study, verify, q2in };
enum class BoundaryKind { periodic, free, clamped };
enum class AiryModel { incompressible, compressible };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::solve: return "solve";
    case Command::airy: return "airy";
    case Command::limit_study: return "limit-study";
    case Command::verify: return "verify";
    case Command::q2in: return "q2in";
  }
  return "?";
}

inline std::optional<Command> command_from_string(const std::string& s) {
  for (Command c : {Command::solve, Command::airy, Command::limit_study, Command::verify, Command::q2in})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline std::string to_string(BoundaryKind b) {
  switch (b) {
    case BoundaryKind::periodic: return "periodic";
    case BoundaryKind::free: return "free";
    case BoundaryKind::clamped: return "clamped";
  }
  return "?";
}

struct MaterialSpec {
  enum class Kind { isotropic, matrix } kind = Kind::isotropic;
  double lambda = 1.0;
  double mu = 1.0;
  std::string file;     // resolved path for matrix materials
  QuadForm3 q3 = q3_isotropic(1.0, 1.0);
};

struct ForceSpec {
  std::string preset = "zero"; // sincos | bump-dipole | zero, or empty with a file
  double amplitude = 1.0;
  std::string file;
};

struct RunConfig {
  Command command = Command::solve;
  double lx = 1.0, ly = 1.0;
  int nx = 32, ny = 32;
  BoundaryKind bc = BoundaryKind::periodic;
  MaterialSpec material;
  ForceSpec force;
  double r33 = 1.0;
  SolverConfig solver;
  double init_noise = 0.0; // seeded perturbation of the initial deflection
  AiryModel airy_model = AiryModel::incompressible;
  FixedPointConfig airy;
  std::vector<double> nu_list{0.3, 0.4, 0.45, 0.49, 0.499};
  int trials = 1000;
  std::uint64_t seed = 12345;
  std::string source; // verbatim configuration text

  Grid grid() const {
    return Grid(lx, ly, nx, ny, bc == BoundaryKind::periodic ? Layout::periodic : Layout::bounded);
  }
};

namespace detail {

inline std::string at(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return "config";
  return "config:" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

[[noreturn]] inline void config_fail(const YAML::Node& n, const std::string& msg) {
  throw ConfigError(at(n) + ": " + msg);
}

inline void check_keys(const YAML::Node& map, const std::string& section, const std::set<std::string>& known) {
  if (!map.IsMap()) config_fail(map, "'" + section + "' must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) config_fail(kv.first, "unknown key '" + key + "' in " + section);
  }
}

template <class T>
T scalar_as(const YAML::Node& n, const std::string& key, const char* type) {
  if (!n.IsScalar()) config_fail(n, "'" + key + "' must be " + type);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    config_fail(n, "'" + key + "' must be " + type + ", got '" + n.Scalar() + "'");
  }
}

template <class T>
void read_opt(const YAML::Node& map, const std::string& key, T& out, const char* type) {
  if (const auto n = map[key]) out = scalar_as<T>(n, key, type);
}

template <class T>
T read_req(const YAML::Node& map, const std::string& section, const std::string& key, const char* type) {
  const auto n = map[key];
  if (!n) config_fail(map, "missing required key '" + key + "' in " + section);
  return scalar_as<T>(n, key, type);
}

inline void positive(const YAML::Node& n, double x, const std::string& key) {
  if (!(x > 0.0) || !std::isfinite(x)) config_fail(n, "'" + key + "' must be positive");
}

inline std::string resolve(const std::string& path, const std::filesystem::path& base) {
  std::filesystem::path p(path);
  if (p.is_relative()) p = base / p;
  return p.lexically_normal().string();
}

} // namespace detail

/// Parses and validates a configuration. Relative file paths resolve
/// against base_dir. `command_hint` comes from the command line and must
/// agree with a command given in the document.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".",
                              std::optional<Command> command_hint = std::nullopt) {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("config:" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, "top level",
             {"command", "seed", "domain", "grid", "material", "force", "r33", "solver", "airy", "limit_study",
              "verify"});
  RunConfig cfg;
  cfg.source = text;

  if (const auto n = root["command"]) {
    const auto name = scalar_as<std::string>(n, "command", "a string");
    const auto c = command_from_string(name);
    if (!c) config_fail(n, "unknown command '" + name + "'");
    if (command_hint && *command_hint != *c)
      config_fail(n, "command '" + name + "' disagrees with the command line ('" + to_string(*command_hint) + "')");
    cfg.command = *c;
  } else if (command_hint) {
    cfg.command = *command_hint;
  } else {
    config_fail(root, "missing required key 'command'");
  }
  read_opt(root, "seed", cfg.seed, "a non-negative integer");

  const bool needs_grid = cfg.command == Command::solve || cfg.command == Command::airy ||
                          cfg.command == Command::limit_study;
  const bool needs_material = needs_grid || cfg.command == Command::q2in;

  if (const auto d = root["domain"]) {
    check_keys(d, "domain", {"lx", "ly"});
    read_opt(d, "lx", cfg.lx, "a number");
    read_opt(d, "ly", cfg.ly, "a number");
    positive(d, cfg.lx, "lx");
    positive(d, cfg.ly, "ly");
  }

  if (const auto g = root["grid"]) {
    check_keys(g, "grid", {"nx", "ny", "bc"});
    cfg.nx = read_req<int>(g, "grid", "nx", "an integer");
    cfg.ny = read_req<int>(g, "grid", "ny", "an integer");
    if (cfg.nx < 4 || cfg.ny < 4) config_fail(g, "grid needs nx, ny >= 4");
    if (cfg.nx > 4096 || cfg.ny > 4096) config_fail(g, "grid is limited to 4096 nodes per direction");
    std::string bc = "periodic";
    read_opt(g, "bc", bc, "a string");
    if (bc == "periodic") cfg.bc = BoundaryKind::periodic;
    else if (bc == "free") cfg.bc = BoundaryKind::free;
    else if (bc == "clamped") cfg.bc = BoundaryKind::clamped;
    else config_fail(g["bc"], "bc must be periodic, free or clamped");
  } else if (needs_grid) {
    config_fail(root, "missing required section 'grid'");
  }
  if (cfg.command == Command::solve && cfg.bc == BoundaryKind::clamped)
    config_fail(root["grid"], "solve supports periodic and free boundaries");
  if ((cfg.command == Command::airy || cfg.command == Command::limit_study) && cfg.bc == BoundaryKind::free)
    config_fail(root["grid"], "the Airy route supports periodic and clamped boundaries");

  if (const auto m = root["material"]) {
    const auto type = read_req<std::string>(m, "material", "type", "a string");
    if (type == "isotropic") {
      check_keys(m, "material", {"type", "lambda", "mu"});
      cfg.material.kind = MaterialSpec::Kind::isotropic;
      cfg.material.mu = read_req<double>(m, "material", "mu", "a number");
      cfg.material.lambda = read_req<double>(m, "material", "lambda", "a number");
      try {
        cfg.material.q3 = q3_isotropic(cfg.material.lambda, cfg.material.mu);
      } catch (const std::exception& e) {
        config_fail(m, e.what());
      }
    } else if (type == "matrix") {
      check_keys(m, "material", {"type", "file"});
      cfg.material.kind = MaterialSpec::Kind::matrix;
      cfg.material.file = resolve(read_req<std::string>(m, "material", "file", "a path"), base_dir);
      try {
        cfg.material.q3 = load_quadform3(cfg.material.file);
      } catch (const std::exception& e) {
        config_fail(m["file"], e.what());
      }
    } else {
      config_fail(m["type"], "material type must be isotropic or matrix");
    }
  } else if (needs_material) {
    config_fail(root, "missing required section 'material'");
  }
  if ((cfg.command == Command::airy || cfg.command == Command::limit_study) &&
      cfg.material.kind != MaterialSpec::Kind::isotropic)
    config_fail(root["material"], "the Airy route needs an isotropic material");

  if (const auto f = root["force"]) {
    check_keys(f, "force", {"preset", "amplitude", "file"});
    const bool has_preset = static_cast<bool>(f["preset"]), has_file = static_cast<bool>(f["file"]);
    if (has_preset == has_file) config_fail(f, "force needs exactly one of 'preset' or 'file'");
    if (has_preset) {
      cfg.force.preset = scalar_as<std::string>(f["preset"], "preset", "a string");
      if (cfg.force.preset != "sincos" && cfg.force.preset != "bump-dipole" && cfg.force.preset != "zero")
        config_fail(f["preset"], "preset must be sincos, bump-dipole or zero");
      read_opt(f, "amplitude", cfg.force.amplitude, "a number");
      if (!std::isfinite(cfg.force.amplitude)) config_fail(f["amplitude"], "amplitude must be finite");
    } else {
      if (f["amplitude"]) config_fail(f["amplitude"], "amplitude applies to presets only");
      cfg.force.preset.clear();
      cfg.force.file = resolve(scalar_as<std::string>(f["file"], "file", "a path"), base_dir);
      if (!std::filesystem::exists(cfg.force.file)) config_fail(f["file"], "force file '" + cfg.force.file + "' not found");
    }
  } else if (needs_grid) {
    config_fail(root, "missing required section 'force'");
  }

  if (const auto n = root["r33"]) {
    cfg.r33 = scalar_as<double>(n, "r33", "a number");
    if (!(std::abs(cfg.r33) <= 1.0)) config_fail(n, "|r33| must not exceed 1");
  }

  if (const auto s = root["solver"]) {
    check_keys(s, "solver",
               {"max_outer", "tol_grad", "tol_el", "cg_tol", "cg_max", "backtrack", "armijo_c1", "max_backtracks",
                "lbfgs_memory", "init_scale", "init_noise"});
    auto& sc = cfg.solver;
    read_opt(s, "max_outer", sc.max_outer, "an integer");
    read_opt(s, "tol_grad", sc.tol_grad, "a number");
    read_opt(s, "tol_el", sc.tol_el, "a number");
    read_opt(s, "cg_tol", sc.cg_tol, "a number");
    read_opt(s, "cg_max", sc.cg_max, "an integer");
    read_opt(s, "backtrack", sc.backtrack, "a number");
    read_opt(s, "armijo_c1", sc.armijo_c1, "a number");
    read_opt(s, "max_backtracks", sc.max_backtracks, "an integer");
    read_opt(s, "lbfgs_memory", sc.lbfgs_memory, "an integer");
    read_opt(s, "init_scale", sc.init_scale, "a number");
    read_opt(s, "init_noise", cfg.init_noise, "a number");
    try {
      sc.validate();
    } catch (const std::exception& e) {
      config_fail(s, e.what());
    }
    if (!(cfg.init_noise >= 0.0)) config_fail(s["init_noise"], "init_noise must be non-negative");
  }

  if (const auto a = root["airy"]) {
    check_keys(a, "airy", {"model", "alpha", "min_alpha", "tol", "max_iter"});
    std::string model = "incompressible";
    read_opt(a, "model", model, "a string");
    if (model == "incompressible") cfg.airy_model = AiryModel::incompressible;
    else if (model == "compressible") cfg.airy_model = AiryModel::compressible;
    else config_fail(a["model"], "model must be incompressible or compressible");
    read_opt(a, "alpha", cfg.airy.alpha, "a number");
    read_opt(a, "min_alpha", cfg.airy.min_alpha, "a number");
    read_opt(a, "tol", cfg.airy.tol, "a number");
    read_opt(a, "max_iter", cfg.airy.max_iter, "an integer");
    if (!(cfg.airy.alpha > 0 && cfg.airy.alpha <= 1)) config_fail(a, "alpha must lie in (0, 1]");
    if (!(cfg.airy.tol > 0)) config_fail(a, "tol must be positive");
    if (cfg.airy.max_iter < 1) config_fail(a, "max_iter must be positive");
  }

  if (const auto l = root["limit_study"]) {
    check_keys(l, "limit_study", {"nu"});
    if (const auto nu = l["nu"]) {
      if (!nu.IsSequence()) config_fail(nu, "'nu' must be a list of numbers");
      cfg.nu_list.clear();
      for (const auto& x : nu) {
        const double v = scalar_as<double>(x, "nu", "a number");
        if (!(v >= 0.0 && v < 0.5)) config_fail(x, "each nu must lie in [0, 1/2)");
        cfg.nu_list.push_back(v);
      }
    }
  }

  if (const auto v = root["verify"]) {
    check_keys(v, "verify", {"trials"});
    read_opt(v, "trials", cfg.trials, "an integer");
    if (cfg.trials < 1) config_fail(v["trials"], "trials must be positive");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path, std::optional<Command> command_hint = std::nullopt) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  const auto base = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), base.empty() ? std::filesystem::path(".") : base, command_hint);
}

/// Zero-mean loads: `sincos` = A sin(2 pi x/Lx) sin(2 pi y/Ly), whose node
/// sum vanishes on both layouts; `bump-dipole` = two opposite Gaussian bumps,
/// shifted to zero weighted mean.
inline ScalarField make_force(const RunConfig& cfg) {
  const Grid g = cfg.grid();
  if (!cfg.force.file.empty()) {
    auto f = load_scalar_field(cfg.force.file);
    if (!(f.grid == g)) throw GridMismatch("force file grid " + f.grid.describe() + " vs config " + g.describe());
    return f;
  }
  const double a = cfg.force.amplitude, pi = std::numbers::pi;
  if (cfg.force.preset == "sincos")
    return ScalarField::sample(g, [&](double x, double y) {
      return a * std::sin(2.0 * pi * x / g.lx) * std::sin(2.0 * pi * y / g.ly);
    });
  if (cfg.force.preset == "bump-dipole") {
    const double s = 0.1 * std::min(g.lx, g.ly);
    auto bump = [&](double x, double y, double cx, double cy) {
      const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      return std::exp(-0.5 * r2 / (s * s));
    };
    auto f = ScalarField::sample(g, [&](double x, double y) {
      return a * (bump(x, y, 0.3 * g.lx, 0.5 * g.ly) - bump(x, y, 0.7 * g.lx, 0.5 * g.ly));
    });
    f.values.array() -= mean(g, f.values);
    return f;
  }
  return ScalarField(g);
}

} // namespace vkplate
