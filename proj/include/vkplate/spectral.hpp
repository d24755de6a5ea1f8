#pragma once

// Diagonalization of circulant difference operators on periodic grids.

#include "vkplate/grid.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace vkplate {

namespace detail {
// The FFTW planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace detail

/// Fourier symbols of the stencils on a periodic grid, for mode angles
/// theta = 2*pi*k/n.
struct Symbols {
  double first_x, first_y;   // d/dx has symbol i*first_x
  double second_x, second_y; // three-point second differences
  double mixed;              // dx*dy

  static Symbols at(double tx, double ty, double hx, double hy) {
    Symbols s;
    s.first_x = std::sin(tx) / hx;
    s.first_y = std::sin(ty) / hy;
    const double sx = std::sin(0.5 * tx), sy = std::sin(0.5 * ty);
    s.second_x = -4.0 * sx * sx / (hx * hx);
    s.second_y = -4.0 * sy * sy / (hy * hy);
    s.mixed = -s.first_x * s.first_y;
    return s;
  }
};

/// Real-to-complex 2d transforms sized for one periodic grid. Not copyable;
/// each instance owns its plans and buffers.
class PeriodicSpectrum {
public:
  using Complex = std::complex<double>;

  explicit PeriodicSpectrum(const Grid& g) : grid_(g), nxc_(g.nx / 2 + 1) {
    if (!g.periodic()) throw std::invalid_argument("PeriodicSpectrum needs a periodic grid");
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * g.size()));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * g.ny * nxc_));
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(g.ny, g.nx, real_, spec_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_2d(g.ny, g.nx, spec_, real_, FFTW_ESTIMATE);
  }
  PeriodicSpectrum(const PeriodicSpectrum&) = delete;
  PeriodicSpectrum& operator=(const PeriodicSpectrum&) = delete;
  ~PeriodicSpectrum() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  const Grid& grid() const { return grid_; }
  int modes() const { return grid_.ny * nxc_; }

  std::vector<Complex> forward(const Eigen::VectorXd& v) const {
    std::copy(v.data(), v.data() + grid_.size(), real_);
    fftw_execute(fwd_);
    std::vector<Complex> out(modes());
    for (int k = 0; k < modes(); ++k) out[k] = {spec_[k][0], spec_[k][1]};
    return out;
  }

  Eigen::VectorXd backward(const std::vector<Complex>& c) const {
    for (int k = 0; k < modes(); ++k) {
      spec_[k][0] = c[k].real();
      spec_[k][1] = c[k].imag();
    }
    fftw_execute(bwd_);
    Eigen::VectorXd out(grid_.size());
    const double scale = 1.0 / grid_.size();
    for (int k = 0; k < grid_.size(); ++k) out(k) = real_[k] * scale;
    return out;
  }

  /// Calls fn(mode_index, symbols) for every stored mode.
  template <class F>
  void for_each_mode(F&& fn) const {
    const double two_pi = 2.0 * std::numbers::pi;
    for (int ky = 0; ky < grid_.ny; ++ky)
      for (int kx = 0; kx < nxc_; ++kx)
        fn(ky * nxc_ + kx, Symbols::at(two_pi * kx / grid_.nx, two_pi * ky / grid_.ny,
                                       grid_.hx(), grid_.hy()));
  }

  /// Multiplies each mode by a real multiplier m(symbols).
  template <class F>
  Eigen::VectorXd apply_multiplier(const Eigen::VectorXd& v, F&& m) const {
    auto c = forward(v);
    for_each_mode([&](int k, const Symbols& s) { c[k] *= m(s); });
    return backward(c);
  }

private:
  Grid grid_;
  int nxc_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

} // namespace vkplate
