#ifndef EDSIM_STATE_HPP
#define EDSIM_STATE_HPP

// Complex and hydrodynamic representations of a single-particle state on a
// uniform 1D grid, and the fields derived from them.
//
// The hydrodynamic pair is (rho, phi) with psi = sqrt(rho) * exp(i*phi). The
// phase is kept unwrapped along the grid. The entropy field is derived from it
// as S = phi + log(sqrt(rho)) and is never stored.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "edsim/error.hpp"
#include "edsim/grid.hpp"

namespace edsim {

using Complex = std::complex<double>;

/// hbar, mass and the external potential V(x).
struct PhysicalParams {
  double hbar = 1.0;
  double mass = 1.0;
  std::function<double(double)> potential = [](double) { return 0.0; };

  void validate() const {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw RangeError("hbar must be > 0");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw RangeError("mass must be > 0");
    if (!potential) throw RangeError("potential is not set");
  }

  std::vector<double> potential_on(const Grid1D& grid) const {
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      v[j] = potential(grid.x(j));
      if (!std::isfinite(v[j])) {
        throw RangeError("potential is not finite at x = " + std::to_string(grid.x(j)));
      }
    }
    return v;
  }

  static PhysicalParams free(double hbar = 1.0, double mass = 1.0) {
    return {hbar, mass, [](double) { return 0.0; }};
  }

  static PhysicalParams harmonic(double omega, double center = 0.0,
                                 double hbar = 1.0, double mass = 1.0) {
    return {hbar, mass, [=](double x) {
              const double d = x - center;
              return 0.5 * mass * omega * omega * d * d;
            }};
  }
};

/// Complex amplitudes psi_j per cell (units length^-1/2).
class WaveFunction {
 public:
  WaveFunction(Grid1D grid, std::vector<Complex> amplitudes)
      : grid_(grid), amps_(std::move(amplitudes)) {
    if (amps_.size() != grid_.size()) {
      throw RangeError("wavefunction: amplitude count does not match grid");
    }
  }

  /// Builds and normalizes.
  static WaveFunction normalized(Grid1D grid, std::vector<Complex> amplitudes) {
    WaveFunction psi(grid, std::move(amplitudes));
    psi.normalize();
    return psi;
  }

  const Grid1D& grid() const { return grid_; }
  std::span<const Complex> amplitudes() const { return amps_; }
  std::vector<Complex>& mutable_amplitudes() { return amps_; }
  std::size_t size() const { return amps_.size(); }
  const Complex& operator[](std::size_t j) const { return amps_[j]; }

  /// Sum_j |psi_j|^2 dx.
  double total_probability() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s * grid_.dx();
  }

  void normalize() {
    const double p = total_probability();
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw RangeError("wavefunction: cannot normalize a zero or non-finite state");
    }
    const double scale = 1.0 / std::sqrt(p);
    for (auto& a : amps_) a *= scale;
  }

  std::vector<double> density() const {
    std::vector<double> rho(amps_.size());
    for (std::size_t j = 0; j < amps_.size(); ++j) rho[j] = std::norm(amps_[j]);
    return rho;
  }

  WaveFunction with_global_phase(double theta) const {
    WaveFunction out = *this;
    const Complex f = std::polar(1.0, theta);
    for (auto& a : out.amps_) a *= f;
    return out;
  }

 private:
  Grid1D grid_;
  std::vector<Complex> amps_;
};

/// What to_hydro does with sub-floor cells at the ends of a non-periodic grid.
enum class TailPolicy {
  Reject,            // any sub-floor cell is a node
  AllowVacuumTails,  // sub-floor runs touching either end are vacuum tails
};

struct HydroOptions {
  double node_floor = 1e-12;
  TailPolicy tails = TailPolicy::Reject;
};

/// Paired real fields (rho, phi). `support_begin..support_end` (half-open) is
/// the range of cells above the node floor; cells outside it are vacuum tails
/// whose values carry no physical content.
struct HydroState {
  Grid1D grid;
  std::vector<double> rho;
  std::vector<double> phi;
  std::size_t support_begin = 0;
  std::size_t support_end = 0;

  HydroState(Grid1D g, std::vector<double> r, std::vector<double> p)
      : grid(g), rho(std::move(r)), phi(std::move(p)), support_end(rho.size()) {
    if (rho.size() != grid.size() || phi.size() != grid.size()) {
      throw RangeError("hydro state: field size does not match grid");
    }
  }

  bool has_tails() const { return support_begin > 0 || support_end < rho.size(); }

  double total_probability() const {
    double s = 0.0;
    for (double r : rho) s += r;
    return s * grid.dx();
  }

  void validate() const {
    for (std::size_t j = 0; j < rho.size(); ++j) {
      if (!(rho[j] >= 0.0) || !std::isfinite(rho[j]) || !std::isfinite(phi[j])) {
        throw RangeError("hydro state: rho must be finite and non-negative, phi finite");
      }
    }
    if (std::abs(total_probability() - 1.0) > 1e-10) {
      throw RangeError("hydro state: sum(rho) dx must be 1");
    }
  }
};

/// Phase unwrapped along the grid: adjacent increments are the principal
/// values of arg(psi_{j+1} / psi_j), anchored at the principal arg of psi_0.
inline std::vector<double> unwrapped_phase(const WaveFunction& psi) {
  const std::size_t n = psi.size();
  std::vector<double> phi(n);
  phi[0] = std::arg(psi[0]);
  for (std::size_t j = 1; j < n; ++j) {
    phi[j] = phi[j - 1] + std::arg(psi[j] * std::conj(psi[j - 1]));
  }
  return phi;
}

namespace detail {

struct Support {
  std::size_t begin;
  std::size_t end;
};

/// Locates the above-floor support. Sub-floor cells are nodes unless the
/// policy admits them as tails touching the grid ends.
inline Support find_support(std::span<const double> rho, double floor,
                            TailPolicy policy, const Grid1D& grid) {
  const std::size_t n = rho.size();
  auto below = [&](std::size_t j) { return !(rho[j] >= floor); };
  if (policy == TailPolicy::Reject) {
    for (std::size_t j = 0; j < n; ++j) {
      if (below(j)) {
        throw NodeError("density " + std::to_string(rho[j]) + " below node floor at x = " +
                        std::to_string(grid.x(j)));
      }
    }
    return {0, n};
  }
  std::size_t lo = 0;
  while (lo < n && below(lo)) ++lo;
  std::size_t hi = n;
  while (hi > lo && below(hi - 1)) --hi;
  if (hi - lo < 4) throw NodeError("density support has fewer than 4 cells");
  for (std::size_t j = lo; j < hi; ++j) {
    if (below(j)) {
      throw NodeError("interior node: density " + std::to_string(rho[j]) +
                      " below floor at x = " + std::to_string(grid.x(j)));
    }
  }
  return {lo, hi};
}

}  // namespace detail

inline HydroState to_hydro(const WaveFunction& psi, const HydroOptions& opts = {}) {
  auto rho = psi.density();
  const auto support = detail::find_support(rho, opts.node_floor, opts.tails, psi.grid());
  HydroState h(psi.grid(), std::move(rho), unwrapped_phase(psi));
  h.support_begin = support.begin;
  h.support_end = support.end;
  return h;
}

inline WaveFunction from_hydro(const HydroState& h) {
  std::vector<Complex> amps(h.rho.size());
  for (std::size_t j = 0; j < amps.size(); ++j) {
    amps[j] = std::polar(std::sqrt(std::max(h.rho[j], 0.0)), h.phi[j]);
  }
  return WaveFunction::normalized(h.grid, std::move(amps));
}

/// S_j = phi_j + (1/2) log rho_j.
inline std::vector<double> entropy_field(const HydroState& h) {
  std::vector<double> s(h.rho.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (!(h.rho[j] > 0.0)) {
      throw NodeError("entropy field undefined where rho <= 0 (x = " +
                      std::to_string(h.grid.x(j)) + ")");
    }
    s[j] = h.phi[j] + 0.5 * std::log(h.rho[j]);
  }
  return s;
}

/// Gradient of an unwrapped phase. On a periodic grid the seam increment is
/// taken modulo 2*pi, since only exp(i*phi) is periodic.
inline std::vector<double> phase_gradient(std::span<const double> phi, double dx,
                                          Boundary bc) {
  if (bc == Boundary::HardWall) return stencil::gradient(phi, dx, bc);
  const std::size_t n = phi.size();
  std::vector<double> g(n);
  for (std::size_t j = 1; j + 1 < n; ++j) g[j] = (phi[j + 1] - phi[j - 1]) / (2 * dx);
  const double seam = principal_angle(phi[0] - phi[n - 1]);
  g[0] = (phi[1] - phi[0] + seam) / (2 * dx);
  g[n - 1] = (seam + phi[n - 1] - phi[n - 2]) / (2 * dx);
  return g;
}

/// v_j = (hbar/m) (grad phi)_j.
inline std::vector<double> current_velocity(const HydroState& h, const PhysicalParams& p,
                                            Boundary bc = Boundary::Periodic) {
  auto v = phase_gradient(h.phi, h.grid.dx(), bc);
  const double c = p.hbar / p.mass;
  for (auto& x : v) x *= c;
  return v;
}

// ---------------------------------------------------------------------------
// Initial-state presets.

/// Gaussian packet whose density has mean mu and standard deviation sigma,
/// carrying wavenumber k.
inline WaveFunction gaussian_packet(const Grid1D& grid, double mu, double sigma, double k) {
  if (!(sigma > 0.0)) throw RangeError("gaussian: sigma must be > 0");
  std::vector<Complex> amps(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double d = grid.x(j) - mu;
    amps[j] = std::polar(std::exp(-d * d / (4 * sigma * sigma)), k * d);
  }
  return WaveFunction::normalized(grid, std::move(amps));
}

inline WaveFunction plane_wave(const Grid1D& grid, double k) {
  std::vector<Complex> amps(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) amps[j] = std::polar(1.0, k * grid.x(j));
  return WaveFunction::normalized(grid, std::move(amps));
}

/// n-th eigenstate of the harmonic well V = m w^2 (x - center)^2 / 2.
inline WaveFunction harmonic_eigenstate(const Grid1D& grid, const PhysicalParams& p,
                                        double omega, double center, unsigned level) {
  if (!(omega > 0.0)) throw RangeError("harmonic eigenstate: omega must be > 0");
  const double scale = std::sqrt(p.mass * omega / p.hbar);
  std::vector<Complex> amps(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double xi = scale * (grid.x(j) - center);
    amps[j] = std::hermite(level, xi) * std::exp(-0.5 * xi * xi);
  }
  return WaveFunction::normalized(grid, std::move(amps));
}

/// Coherent state: harmonic ground state displaced to x0.
inline WaveFunction coherent_state(const Grid1D& grid, const PhysicalParams& p,
                                   double omega, double center, double x0) {
  return harmonic_eigenstate(grid, p, omega, center + x0, 0);
}

}  // namespace edsim

#endif  // EDSIM_STATE_HPP
