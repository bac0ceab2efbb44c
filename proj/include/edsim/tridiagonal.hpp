#ifndef EDSIM_TRIDIAGONAL_HPP
#define EDSIM_TRIDIAGONAL_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "edsim/error.hpp"

namespace edsim {

/// Factored tridiagonal system, reused across
/// right-hand sides. Row j reads sub[j] x[j-1] + diag[j] x[j] + sup[j] x[j+1].
/// With `cyclic`, sub[0] couples to x[n-1] and sup[n-1] couples to x[0]
/// (Sherman-Morrison on top of the plain factorization).
template <typename T>
class TridiagonalSolver {
 public:
  TridiagonalSolver(std::vector<T> sub, std::vector<T> diag, std::vector<T> sup,
                    bool cyclic)
      : n_(diag.size()), cyclic_(cyclic) {
    if (n_ < 3 || sub.size() != n_ || sup.size() != n_) {
      throw SolverError("tridiagonal: inconsistent band sizes");
    }
    if (cyclic_) {
      corner_lo_ = sub[0];   // A[0][n-1]
      corner_hi_ = sup[n_ - 1];  // A[n-1][0]
      gamma_ = -diag[0];
      diag[0] -= gamma_;
      diag[n_ - 1] -= corner_hi_ * corner_lo_ / gamma_;
    }
    sub_ = std::move(sub);
    factor(std::move(diag), std::move(sup));
    if (cyclic_) {
      std::vector<T> u(n_, T{});
      u[0] = gamma_;
      u[n_ - 1] = corner_hi_;
      z_ = solve_plain(u);
      denom_ = T{1} + z_[0] + corner_lo_ * z_[n_ - 1] / gamma_;
      if (std::abs(denom_) < kPivotFloor) throw SolverError("cyclic tridiagonal: singular update");
    }
  }

  std::size_t size() const { return n_; }

  std::vector<T> solve(std::span<const T> rhs) const {
    if (rhs.size() != n_) throw SolverError("tridiagonal: rhs size mismatch");
    std::vector<T> y = solve_plain(rhs);
    if (cyclic_) {
      const T fact = (y[0] + corner_lo_ * y[n_ - 1] / gamma_) / denom_;
      for (std::size_t j = 0; j < n_; ++j) y[j] -= fact * z_[j];
    }
    for (const auto& v : y) {
      if (!std::isfinite(std::abs(v))) throw SolverError("tridiagonal: non-finite solution");
    }
    return y;
  }

 private:
  static constexpr double kPivotFloor = 1e-300;

  void factor(std::vector<T> diag, std::vector<T> sup) {
    inv_pivot_.resize(n_);
    sup_scaled_.resize(n_);
    T pivot = diag[0];
    for (std::size_t j = 0; j < n_; ++j) {
      if (j > 0) pivot = diag[j] - sub_[j] * sup_scaled_[j - 1];
      if (std::abs(pivot) < kPivotFloor || !std::isfinite(std::abs(pivot))) {
        throw SolverError("tridiagonal: zero pivot at row " + std::to_string(j));
      }
      inv_pivot_[j] = T{1} / pivot;
      sup_scaled_[j] = (j + 1 < n_) ? sup[j] * inv_pivot_[j] : T{};
    }
  }

  std::vector<T> solve_plain(std::span<const T> rhs) const {
    std::vector<T> y(n_);
    y[0] = rhs[0] * inv_pivot_[0];
    for (std::size_t j = 1; j < n_; ++j) {
      y[j] = (rhs[j] - sub_[j] * y[j - 1]) * inv_pivot_[j];
    }
    for (std::size_t j = n_ - 1; j-- > 0;) y[j] -= sup_scaled_[j] * y[j + 1];
    return y;
  }

  std::size_t n_;
  bool cyclic_;
  std::vector<T> sub_;
  std::vector<T> inv_pivot_;
  std::vector<T> sup_scaled_;
  T corner_lo_{};
  T corner_hi_{};
  T gamma_{};
  std::vector<T> z_;
  T denom_{};
};

}  // namespace edsim

#endif  // EDSIM_TRIDIAGONAL_HPP
