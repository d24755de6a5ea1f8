#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vkplate {

/// Shape or grid disagreement between fields that must live on the same grid.
class GridMismatch : public std::invalid_argument {
public:
  explicit GridMismatch(const std::string& what)
      : std::invalid_argument("grid mismatch: " + what) {}
};

/// An iterative method stopped without reaching its tolerance.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, double final_residual)
      : std::runtime_error(what), residual(final_residual) {}
  double residual;
};

/// A fixed-point iteration blew up; carries the residual history.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, std::vector<double> hist)
      : std::runtime_error(what), history(std::move(hist)) {}
  std::vector<double> history;
};

} // namespace vkplate
