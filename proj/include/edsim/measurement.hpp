#ifndef EDSIM_MEASUREMENT_HPP
#define EDSIM_MEASUREMENT_HPP

// Measurement devices: a unitary U = sum_i |x_i><a_i| that sends each
// eigenvector a_i of an observable to a distinct position cell x_i, after
// which every measurement is a position detection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edsim/error.hpp"
#include "edsim/grid.hpp"
#include "edsim/random.hpp"
#include "edsim/state.hpp"
#include "edsim/trajectories.hpp"

namespace edsim {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kDeviceTolerance = 1e-10;

inline double max_abs_entry(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

struct DiscreteDevice {
  std::size_t dim = 0;
  ComplexMatrix basis;  // column i is a_i
  ComplexVector eigenvalues;
  std::vector<std::size_t> target_cells;
  ComplexMatrix unitary;

  /// Index i with x_i == cell, or dim if the cell is not a target.
  std::size_t index_of_cell(std::size_t cell) const {
    const auto it = std::find(target_cells.begin(), target_cells.end(), cell);
    return static_cast<std::size_t>(it - target_cells.begin());
  }
};

inline DiscreteDevice build_device(ComplexMatrix basis, std::vector<std::size_t> target_cells,
                                   ComplexVector eigenvalues) {
  const auto n = static_cast<std::size_t>(basis.rows());
  if (n == 0 || basis.cols() != basis.rows()) {
    throw BasisError("device basis must be N vectors of dimension N, N >= 1");
  }
  if (target_cells.size() != n || static_cast<std::size_t>(eigenvalues.size()) != n) {
    throw BasisError("device: need exactly N target cells and N eigenvalues");
  }
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (!std::isfinite(std::abs(eigenvalues[i]))) throw BasisError("device: non-finite eigenvalue");
  }
  const ComplexMatrix id = ComplexMatrix::Identity(basis.rows(), basis.cols());
  const double ortho = max_abs_entry(basis.adjoint() * basis - id);
  if (!(ortho < kDeviceTolerance)) {
    throw BasisError("device basis is not orthonormal (max deviation " + std::to_string(ortho) + ")");
  }
  const double complete = max_abs_entry(basis * basis.adjoint() - id);
  if (!(complete < kDeviceTolerance)) {
    throw BasisError("device basis is not complete (max deviation " + std::to_string(complete) + ")");
  }
  std::vector<std::size_t> sorted = target_cells;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw CellError("device target cells must be distinct");
  }
  if (sorted.back() >= n) {
    throw CellError("device target cell " + std::to_string(sorted.back()) + " outside 0.." +
                    std::to_string(n - 1));
  }

  DiscreteDevice dev{n, std::move(basis), std::move(eigenvalues), std::move(target_cells), {}};
  dev.unitary = ComplexMatrix::Zero(dev.basis.rows(), dev.basis.cols());
  for (std::size_t i = 0; i < n; ++i) {
    dev.unitary.row(static_cast<Eigen::Index>(dev.target_cells[i])) =
        dev.basis.col(static_cast<Eigen::Index>(i)).adjoint();
  }
  const double unit = max_abs_entry(dev.unitary.adjoint() * dev.unitary - id);
  if (!(unit < kDeviceTolerance)) throw BasisError("device operator is not unitary");
  for (std::size_t i = 0; i < n; ++i) {
    ComplexVector e = ComplexVector::Zero(dev.basis.rows());
    e[static_cast<Eigen::Index>(dev.target_cells[i])] = 1.0;
    const double miss = (dev.unitary * dev.basis.col(static_cast<Eigen::Index>(i)) - e).cwiseAbs().maxCoeff();
    if (!(miss < kDeviceTolerance)) throw BasisError("device does not map a_i onto its cell");
  }
  return dev;
}

/// Position device: standard basis, x_i = i, eigenvalue i.
inline DiscreteDevice position_device(std::size_t n) {
  ComplexVector ev(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> cells(n);
  for (std::size_t i = 0; i < n; ++i) {
    ev[static_cast<Eigen::Index>(i)] = static_cast<double>(i);
    cells[i] = i;
  }
  return build_device(ComplexMatrix::Identity(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n)),
                      std::move(cells), std::move(ev));
}

/// a_k[j] = exp(2 pi i j k / N) / sqrt(N), x_k = k, eigenvalue k (momentum-like).
inline DiscreteDevice fourier_device(std::size_t n) {
  const auto N = static_cast<Eigen::Index>(n);
  ComplexMatrix a(N, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index k = 0; k < N; ++k) {
      const double theta = 2 * std::numbers::pi * static_cast<double>((j * k) % N) / static_cast<double>(N);
      a(j, k) = std::polar(1.0 / std::sqrt(static_cast<double>(n)), theta);
    }
  }
  ComplexVector ev(N);
  std::vector<std::size_t> cells(n);
  for (std::size_t k = 0; k < n; ++k) {
    ev[static_cast<Eigen::Index>(k)] = static_cast<double>(k);
    cells[k] = k;
  }
  return build_device(std::move(a), std::move(cells), std::move(ev));
}

/// A A^dagger == A^dagger A to within tol (max entry).
inline bool check_normal(const ComplexMatrix& a, double tol = kDeviceTolerance) {
  if (a.rows() != a.cols()) return false;
  return max_abs_entry(a * a.adjoint() - a.adjoint() * a) < tol;
}

/// sum_i lambda_i |a_i><a_i|.
inline ComplexMatrix observable(const DiscreteDevice& dev) {
  return dev.basis * dev.eigenvalues.asDiagonal() * dev.basis.adjoint();
}

/// p_i = |<a_i|psi>|^2.
inline std::vector<double> born_probabilities(const DiscreteDevice& dev, const ComplexVector& psi) {
  if (static_cast<std::size_t>(psi.size()) != dev.dim) throw RangeError("state dimension does not match device");
  const ComplexVector c = dev.basis.adjoint() * psi;
  std::vector<double> p(dev.dim);
  for (std::size_t i = 0; i < dev.dim; ++i) p[i] = std::norm(c[static_cast<Eigen::Index>(i)]);
  return p;
}

inline ComplexVector apply_device(const DiscreteDevice& dev, const ComplexVector& psi) {
  if (static_cast<std::size_t>(psi.size()) != dev.dim) throw RangeError("state dimension does not match device");
  return dev.unitary * psi;
}

/// |psi_j|^2 per position cell.
inline std::vector<double> cell_probabilities(const ComplexVector& psi) {
  std::vector<double> p(static_cast<std::size_t>(psi.size()));
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::norm(psi[static_cast<Eigen::Index>(j)]);
  return p;
}

struct OutcomeRecord {
  std::size_t trial = 0;
  std::size_t index = 0;
  Complex eigenvalue;
  std::size_t cell = 0;
  std::size_t weight = 1;
};

enum class OutcomeSampler { Categorical, Trajectory };

/// Subcells per outcome cell when detection goes through the particle sampler.
inline constexpr std::size_t kDetectorSubcells = 8;

/// Applies the device and detects the particle's cell n_trials times.
/// Trial t draws only from its own stream, so trials are order-independent.
inline std::vector<OutcomeRecord> simulate_measurement(const DiscreteDevice& dev, const ComplexVector& psi,
                                                       std::size_t n_trials, std::uint64_t seed,
                                                       OutcomeSampler sampler = OutcomeSampler::Categorical) {
  if (n_trials == 0) throw RangeError("simulate_measurement: n_trials must be >= 1");
  const auto p = cell_probabilities(apply_device(dev, psi));
  std::vector<std::size_t> detected(n_trials);
  if (sampler == OutcomeSampler::Categorical) {
    std::vector<double> cum(p.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) cum[j] = acc += p[j];
    for (std::size_t t = 0; t < n_trials; ++t) {
      auto rng = stream(seed, "measurement", t);
      const double u = rng.uniform() * acc;
      auto it = std::upper_bound(cum.begin(), cum.end(), u);
      if (it == cum.end()) it = std::lower_bound(cum.begin(), cum.end(), acc);
      detected[t] = static_cast<std::size_t>(it - cum.begin());
    }
  } else {
    // Each outcome cell spans kDetectorSubcells sampler cells on [0, N).
    const Grid1D fine(0.0, static_cast<double>(dev.dim), dev.dim * kDetectorSubcells);
    std::vector<double> rho(fine.size());
    for (std::size_t j = 0; j < fine.size(); ++j) rho[j] = p[j / kDetectorSubcells];
    const auto ens = sample_initial(rho, fine, n_trials, derive_seed(seed, "measurement"));
    for (std::size_t t = 0; t < n_trials; ++t) {
      detected[t] = std::min(static_cast<std::size_t>(std::floor(ens.positions[t])), dev.dim - 1);
    }
  }
  std::vector<OutcomeRecord> out(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t) {
    const std::size_t i = dev.index_of_cell(detected[t]);
    out[t] = {t, i, dev.eigenvalues[static_cast<Eigen::Index>(i)], detected[t], 1};
  }
  return out;
}

/// Counts per outcome index.
inline std::vector<std::size_t> tally(const std::vector<OutcomeRecord>& records, std::size_t dim) {
  std::vector<std::size_t> counts(dim, 0);
  for (const auto& r : records) counts[r.index] += r.weight;
  return counts;
}

struct CollapseResult {
  std::size_t index;
  ComplexVector state;
  std::vector<double> posterior;  // over outcome indices
};

/// Conditions on detection at `observed_cell`. With an ideal detector the
/// likelihood of the datum is the indicator of x_i, so the posterior over i
/// is a point mass and the updated description is a_i.
inline CollapseResult collapse_update(const DiscreteDevice& dev, std::size_t observed_cell) {
  const std::size_t i = dev.index_of_cell(observed_cell);
  if (i >= dev.dim) {
    throw CellError("cell " + std::to_string(observed_cell) + " is not a target cell of the device");
  }
  std::vector<double> post(dev.dim, 0.0);
  post[i] = 1.0;
  return {i, dev.basis.col(static_cast<Eigen::Index>(i)), std::move(post)};
}

// ---------------------------------------------------------------------------
// Continuum observables a = g(x).

struct ContinuumDevice {
  std::function<double(double)> g;
  std::function<double(double)> dg;
};

struct ContinuumDensity {
  std::vector<double> a;      // ascending image grid
  std::vector<double> rho_a;  // density over a
  std::vector<double> cumulative;  // trapezoid integral from a.front() to a_j

  /// Trapezoid rule over the image grid.
  double integral() const { return cumulative.empty() ? 0.0 : cumulative.back(); }

  /// Cumulative trapezoid integral, linear between image points.
  double cdf(double x) const {
    if (a.empty() || x <= a.front()) return 0.0;
    if (x >= a.back()) return cumulative.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) - 1;
    const double h = a[k + 1] - a[k], s = x - a[k];
    // Exact integral of the linear interpolant of rho_a over [a_k, x].
    return cumulative[k] + s * rho_a[k] + 0.5 * s * s * (rho_a[k + 1] - rho_a[k]) / h;
  }
};

/// rho_A(a_j) = rho(x_j) / |g'(x_j)| on a_j = g(x_j).
inline ContinuumDensity continuum_pdf(const ContinuumDevice& dev, const WaveFunction& psi,
                                      double min_slope = 1e-12) {
  const Grid1D& grid = psi.grid();
  const auto rho = psi.density();
  const std::size_t n = grid.size();
  std::vector<double> slope(n);
  int sign = 0;
  for (std::size_t j = 0; j < n; ++j) {
    slope[j] = dev.dg(grid.x(j));
    if (!(std::abs(slope[j]) >= min_slope) || !std::isfinite(slope[j])) {
      throw MonotonicityError("|g'(x)| below tolerance at x = " + std::to_string(grid.x(j)));
    }
    const int s = slope[j] > 0 ? 1 : -1;
    if (sign != 0 && s != sign) {
      throw MonotonicityError("g' changes sign at x = " + std::to_string(grid.x(j)));
    }
    sign = s;
  }
  ContinuumDensity out;
  out.a.resize(n);
  out.rho_a.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = sign > 0 ? j : n - 1 - j;
    out.a[j] = dev.g(grid.x(k));
    out.rho_a[j] = rho[k] / std::abs(slope[k]);
  }
  for (std::size_t j = 0; j + 1 < n; ++j) {
    if (!(out.a[j + 1] > out.a[j])) {
      throw MonotonicityError("g is not strictly monotone on the grid");
    }
  }
  out.cumulative.assign(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    out.cumulative[j + 1] =
        out.cumulative[j] + 0.5 * (out.rho_a[j] + out.rho_a[j + 1]) * (out.a[j + 1] - out.a[j]);
  }
  return out;
}

}  // namespace edsim

#endif  // EDSIM_MEASUREMENT_HPP
