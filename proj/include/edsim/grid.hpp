#ifndef EDSIM_GRID_HPP
#define EDSIM_GRID_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "edsim/error.hpp"

namespace edsim {

enum class Boundary { Periodic, HardWall };

/// Uniform cell-centred grid on [x_min, x_max) with n cells.
class Grid1D {
 public:
  static constexpr std::size_t kMinCells = 8;

  Grid1D(double x_min, double x_max, std::size_t n)
      : x_min_(x_min), x_max_(x_max), n_(n) {
    if (!(std::isfinite(x_min) && std::isfinite(x_max)) || !(x_max > x_min)) {
      throw RangeError("grid: x_max must exceed x_min");
    }
    if (n < kMinCells) {
      throw RangeError("grid: need at least " + std::to_string(kMinCells) +
                       " cells, got " + std::to_string(n));
    }
    dx_ = (x_max - x_min) / static_cast<double>(n);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double length() const { return x_max_ - x_min_; }
  std::size_t size() const { return n_; }
  double dx() const { return dx_; }

  double x(std::size_t j) const {
    return x_min_ + (static_cast<double>(j) + 0.5) * dx_;
  }

  std::vector<double> centers() const {
    std::vector<double> xs(n_);
    for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
    return xs;
  }

  /// Index of the cell containing position `pos`, clamped to the grid.
  std::size_t cell_of(double pos) const {
    const double s = std::floor((pos - x_min_) / dx_);
    if (s < 0.0) return 0;
    if (s >= static_cast<double>(n_)) return n_ - 1;
    return static_cast<std::size_t>(s);
  }

  bool operator==(const Grid1D& other) const {
    return x_min_ == other.x_min_ && x_max_ == other.x_max_ && n_ == other.n_;
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

/// Second-order finite-difference stencils. Periodic grids wrap; otherwise the
/// end cells use one-sided second-order stencils.
namespace stencil {

inline std::vector<double> gradient(std::span<const double> f, double dx,
                                    Boundary bc) {
  const std::size_t n = f.size();
  std::vector<double> g(n);
  for (std::size_t j = 1; j + 1 < n; ++j) g[j] = (f[j + 1] - f[j - 1]) / (2 * dx);
  if (bc == Boundary::Periodic) {
    g[0] = (f[1] - f[n - 1]) / (2 * dx);
    g[n - 1] = (f[0] - f[n - 2]) / (2 * dx);
  } else {
    g[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * dx);
    g[n - 1] = (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * dx);
  }
  return g;
}

inline std::vector<double> laplacian(std::span<const double> f, double dx,
                                     Boundary bc) {
  const std::size_t n = f.size();
  const double h2 = dx * dx;
  std::vector<double> g(n);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    g[j] = (f[j + 1] - 2 * f[j] + f[j - 1]) / h2;
  }
  if (bc == Boundary::Periodic) {
    g[0] = (f[1] - 2 * f[0] + f[n - 1]) / h2;
    g[n - 1] = (f[0] - 2 * f[n - 1] + f[n - 2]) / h2;
  } else {
    g[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h2;
    g[n - 1] = (2 * f[n - 1] - 5 * f[n - 2] + 4 * f[n - 3] - f[n - 4]) / h2;
  }
  return g;
}

}  // namespace stencil

/// Wraps an angle into (-pi, pi].
inline double principal_angle(double a) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  a = std::remainder(a, kTwoPi);
  if (a <= -kTwoPi / 2) a += kTwoPi;
  return a;
}

}  // namespace edsim

#endif  // EDSIM_GRID_HPP
