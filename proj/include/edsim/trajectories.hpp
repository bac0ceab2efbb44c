#ifndef EDSIM_TRAJECTORIES_HPP
#define EDSIM_TRAJECTORIES_HPP

// Ensembles of definite particle positions whose marginal follows rho(x, t).
//
// CurrentFlow moves each particle along dx = v dt. EntropicDiffusion uses
// dx = b dt + sqrt(2 D dt) xi with D = hbar / 2m and b = v + D grad log rho;
// both drive the same continuity equation for rho.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edsim/dynamics.hpp"
#include "edsim/error.hpp"
#include "edsim/grid.hpp"
#include "edsim/random.hpp"

namespace edsim {

enum class SamplerMode { CurrentFlow, EntropicDiffusion };

inline std::string_view to_string(SamplerMode m) {
  return m == SamplerMode::CurrentFlow ? "current_flow" : "entropic_diffusion";
}

struct Ensemble {
  std::vector<double> positions;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;  // steps taken so far; indexes the per-step streams
};

/// Inverse-CDF draw from the cell density with uniform jitter inside the cell.
inline Ensemble sample_initial(std::span<const double> rho, const Grid1D& grid, std::size_t n,
                               std::uint64_t seed, double t = 0.0) {
  if (rho.size() != grid.size()) throw RangeError("sample_initial: density does not match grid");
  if (n == 0) throw RangeError("sample_initial: n must be >= 1");
  std::vector<double> cum(grid.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < rho.size(); ++j) {
    if (!(rho[j] >= 0.0) || !std::isfinite(rho[j])) {
      throw RangeError("sample_initial: density must be finite and non-negative");
    }
    acc += rho[j];
    cum[j] = acc;
  }
  if (!(acc > 0.0)) throw RangeError("sample_initial: density has zero mass");

  Ensemble ens{std::vector<double>(n), t, seed, 0};
  for (std::size_t p = 0; p < n; ++p) {
    auto rng = stream(seed, "sample_initial", p);
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    // Never land in a zero-mass cell at the end of a run of equal sums.
    if (it == cum.end()) it = std::lower_bound(cum.begin(), cum.end(), acc);
    const auto j = static_cast<std::size_t>(it - cum.begin());
    ens.positions[p] = grid.x_min() + (static_cast<double>(j) + rng.uniform()) * grid.dx();
  }
  return ens;
}

/// rho, v and grad log rho on the grid for every snapshot of a trace.
class FlowFields {
 public:
  FlowFields(const EvolutionTrace& trace, const PhysicalParams& p)
      : grid_(trace.snapshots.front().grid()),
        boundary_(trace.boundary),
        node_floor_(trace.node_floor),
        diffusion_(p.hbar / (2 * p.mass)) {
    const double c = p.hbar / p.mass;
    for (const auto& s : trace.snapshots) {
      times_.push_back(s.t);
      rho_.push_back(s.density());
      auto v = phase_gradient(s.phase(), grid_.dx(), boundary_);
      for (auto& x : v) x *= c;
      v_.push_back(std::move(v));
      glog_.push_back(log_gradient(rho_.back()));
    }
  }

  const Grid1D& grid() const { return grid_; }
  Boundary boundary() const { return boundary_; }
  double diffusion() const { return diffusion_; }
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }

  double velocity(double x, double t) const { return sample(v_, x, t); }
  double density(double x, double t) const { return sample(rho_, x, t); }

  /// Drift v + D grad log rho. Throws NodeError when the particle's cell is
  /// below the node floor in either bracketing snapshot.
  double osmotic_drift(double x, double t) const {
    const auto [k, w] = bracket(t);
    const std::size_t j = grid_.cell_of(x);
    for (std::size_t s : {k, std::min(k + 1, times_.size() - 1)}) {
      if (!(rho_[s][j] >= node_floor_)) {
        throw NodeError("particle at x = " + std::to_string(x) +
                        " entered a cell with rho below the node floor (t = " +
                        std::to_string(t) + ")");
      }
    }
    return velocity(x, t) + diffusion_ * sample(glog_, x, t);
  }

  void check_coverage(double t0, double t1) const {
    constexpr double slack = 1e-9;
    if (t0 < t_begin() - slack || t1 > t_end() + slack) {
      throw TraceCoverageError("trace covers [" + std::to_string(t_begin()) + ", " +
                               std::to_string(t_end()) + "], advance needs [" +
                               std::to_string(t0) + ", " + std::to_string(t1) + "]");
    }
  }

 private:
  /// Central differences of log rho; one-sided next to sub-floor cells, NaN
  /// on sub-floor cells themselves.
  std::vector<double> log_gradient(const std::vector<double>& rho) const {
    const std::size_t n = rho.size();
    const bool periodic = boundary_ == Boundary::Periodic;
    std::vector<double> lg(n), g(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < n; ++j) {
      lg[j] = rho[j] >= node_floor_ ? std::log(rho[j]) : std::numeric_limits<double>::quiet_NaN();
    }
    const double dx = grid_.dx();
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lg[j])) continue;
      double left = std::numeric_limits<double>::quiet_NaN(), right = left;
      if (j > 0) left = lg[j - 1];
      else if (periodic) left = lg[n - 1];
      if (j + 1 < n) right = lg[j + 1];
      else if (periodic) right = lg[0];
      if (!std::isnan(left) && !std::isnan(right)) g[j] = (right - left) / (2 * dx);
      else if (!std::isnan(right)) g[j] = (right - lg[j]) / dx;
      else if (!std::isnan(left)) g[j] = (lg[j] - left) / dx;
      else g[j] = 0.0;
    }
    return g;
  }

  std::pair<std::size_t, double> bracket(double t) const {
    if (times_.size() == 1 || t <= times_.front()) return {0, 0.0};
    if (t >= times_.back()) return {times_.size() - 2, 1.0};
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto k = static_cast<std::size_t>(it - times_.begin()) - 1;
    return {k, (t - times_[k]) / (times_[k + 1] - times_[k])};
  }

  /// Linear in x between cell centres, then linear in t between snapshots.
  /// A NaN neighbour falls back to the value of the particle's own cell.
  double sample_x(const std::vector<double>& f, double x) const {
    const std::size_t n = f.size();
    const double s = (x - grid_.x_min()) / grid_.dx() - 0.5;
    const double fl = std::floor(s);
    const double w = s - fl;
    std::ptrdiff_t j0 = static_cast<std::ptrdiff_t>(fl), j1 = j0 + 1;
    const auto ni = static_cast<std::ptrdiff_t>(n);
    if (boundary_ == Boundary::Periodic) {
      j0 = (j0 % ni + ni) % ni;
      j1 = (j1 % ni + ni) % ni;
    } else {
      j0 = std::clamp<std::ptrdiff_t>(j0, 0, ni - 1);
      j1 = std::clamp<std::ptrdiff_t>(j1, 0, ni - 1);
    }
    const double a = f[static_cast<std::size_t>(j0)], b = f[static_cast<std::size_t>(j1)];
    const double v = (1 - w) * a + w * b;
    if (!std::isnan(v)) return v;
    return f[grid_.cell_of(x)];
  }

  double sample(const std::vector<std::vector<double>>& f, double x, double t) const {
    const auto [k, w] = bracket(t);
    const double a = sample_x(f[k], x);
    if (w == 0.0) return a;
    return (1 - w) * a + w * sample_x(f[k + 1], x);
  }

  Grid1D grid_;
  Boundary boundary_;
  double node_floor_;
  double diffusion_;
  std::vector<double> times_;
  std::vector<std::vector<double>> rho_;
  std::vector<std::vector<double>> v_;
  std::vector<std::vector<double>> glog_;
};

namespace detail {

inline double confine(double x, const Grid1D& g, Boundary bc) {
  const double lo = g.x_min(), hi = g.x_max(), len = g.length();
  if (bc == Boundary::Periodic) {
    x = lo + std::fmod(x - lo, len);
    if (x < lo) x += len;
    return x >= hi ? lo : x;
  }
  for (int guard = 0; guard < 64 && (x < lo || x > hi); ++guard) {
    x = x < lo ? 2 * lo - x : 2 * hi - x;
  }
  return std::clamp(x, lo, hi);
}

}  // namespace detail

/// Euler (CurrentFlow) or Euler-Maruyama (EntropicDiffusion) steps of size dt.
/// Each particle draws from its own (seed, particle, step) stream, so the
/// result does not depend on evaluation order.
inline Ensemble advance_ensemble(const Ensemble& ens, const FlowFields& fields, double dt,
                                 SamplerMode mode, std::size_t steps = 1) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw RangeError("advance_ensemble: dt must be > 0");
  fields.check_coverage(ens.t, ens.t + static_cast<double>(steps) * dt);
  const Grid1D& g = fields.grid();
  const double noise = std::sqrt(2 * fields.diffusion() * dt);
  Ensemble out = ens;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = ens.t + static_cast<double>(k) * dt;
    const std::uint64_t step = ens.step + k;
    for (std::size_t p = 0; p < out.positions.size(); ++p) {
      double& x = out.positions[p];
      if (mode == SamplerMode::CurrentFlow) {
        x += fields.velocity(x, t) * dt;
      } else {
        auto rng = stream(ens.seed, "advance_ensemble", p, step);
        std::normal_distribution<double> normal;
        x += fields.osmotic_drift(x, t) * dt + noise * normal(rng);
      }
      x = detail::confine(x, g, fields.boundary());
    }
  }
  out.t = ens.t + static_cast<double>(steps) * dt;
  out.step = ens.step + steps;
  return out;
}

/// Cell-count density, normalized so that sum * dx = 1.
inline std::vector<double> marginal_histogram(const Ensemble& ens, const Grid1D& grid) {
  std::vector<double> h(grid.size(), 0.0);
  if (ens.positions.empty()) return h;
  for (double x : ens.positions) h[grid.cell_of(x)] += 1.0;
  const double scale = 1.0 / (static_cast<double>(ens.positions.size()) * grid.dx());
  for (auto& v : h) v *= scale;
  return h;
}

}  // namespace edsim

#endif  // EDSIM_TRAJECTORIES_HPP
