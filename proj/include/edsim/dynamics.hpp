#ifndef EDSIM_DYNAMICS_HPP
#define EDSIM_DYNAMICS_HPP

// Two time-evolution engines for the same physics:
//   * Schrodinger: Crank-Nicolson on i hbar dpsi/dt = -(hbar^2/2m) psi'' + V psi
//   * Madelung:    RK4 on the continuity equation for rho and the quantum
//                  Hamilton-Jacobi equation for phi.
// plus the conserved energy functional used as a diagnostic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "edsim/error.hpp"
#include "edsim/grid.hpp"
#include "edsim/state.hpp"
#include "edsim/tridiagonal.hpp"

namespace edsim {

enum class Engine { Schrodinger, Madelung };

inline std::string_view to_string(Engine e) {
  return e == Engine::Schrodinger ? "schrodinger" : "madelung";
}

inline std::string_view to_string(Boundary b) {
  return b == Boundary::Periodic ? "periodic" : "hardwall";
}

struct EvolutionConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  Engine engine = Engine::Schrodinger;
  std::size_t snapshot_stride = 1;
  Boundary boundary = Boundary::Periodic;
  double c_stab = 0.1;
  double node_floor = 1e-12;

  /// Largest admissible Madelung step, c_stab * m * dx^2 / hbar.
  double stability_limit(const Grid1D& grid, const PhysicalParams& p) const {
    return c_stab * p.mass * grid.dx() * grid.dx() / p.hbar;
  }

  void validate(const Grid1D& grid, const PhysicalParams& p) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw RangeError("evolution: dt must be > 0");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
      throw RangeError("evolution: t_final must be >= 0");
    }
    if (snapshot_stride < 1) throw RangeError("evolution: snapshot_stride must be >= 1");
    if (!(node_floor >= 0.0)) throw RangeError("evolution: node_floor must be >= 0");
    if (engine == Engine::Madelung && dt > stability_limit(grid, p)) {
      throw StabilityError("madelung: dt = " + std::to_string(dt) +
                           " exceeds stability bound " +
                           std::to_string(stability_limit(grid, p)));
    }
  }

  /// Steps needed to reach t_final with a step no larger than dt.
  std::size_t step_count() const {
    if (t_final == 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9));
  }

  double effective_dt() const {
    const auto steps = step_count();
    return steps == 0 ? dt : t_final / static_cast<double>(steps);
  }
};

// ---------------------------------------------------------------------------
// Hamiltonian on the grid: 3-point Laplacian plus diagonal potential.

struct HamiltonianBands {
  std::vector<double> diag;
  double off = 0.0;
  Boundary bc = Boundary::Periodic;

  HamiltonianBands(const Grid1D& grid, const PhysicalParams& p, Boundary boundary)
      : diag(p.potential_on(grid)), bc(boundary) {
    const double kin = p.hbar * p.hbar / (p.mass * grid.dx() * grid.dx());
    for (auto& d : diag) d += kin;
    off = -0.5 * kin;
  }

  template <typename T>
  std::vector<T> apply(std::span<const T> f) const {
    const std::size_t n = f.size();
    std::vector<T> out(n);
    for (std::size_t j = 0; j < n; ++j) {
      T left = j > 0 ? f[j - 1] : (bc == Boundary::Periodic ? f[n - 1] : T{});
      T right = j + 1 < n ? f[j + 1] : (bc == Boundary::Periodic ? f[0] : T{});
      out[j] = diag[j] * f[j] + off * (left + right);
    }
    return out;
  }
};

/// Crank-Nicolson propagator with the implicit matrix factored once.
class CrankNicolson {
 public:
  CrankNicolson(const Grid1D& grid, const PhysicalParams& p, double dt, Boundary bc)
      : grid_(grid), bands_(grid, p, bc), alpha_(0.0, 0.5 * dt / p.hbar),
        solver_(make_solver(bands_, alpha_, grid.size())) {
    p.validate();
    if (!(dt > 0.0)) throw RangeError("crank-nicolson: dt must be > 0");
  }

  WaveFunction step(const WaveFunction& psi) const {
    const auto hpsi = bands_.apply<Complex>(psi.amplitudes());
    std::vector<Complex> rhs(psi.size());
    for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = psi[j] - alpha_ * hpsi[j];
    return WaveFunction(grid_, solver_.solve(rhs));
  }

 private:
  static TridiagonalSolver<Complex> make_solver(const HamiltonianBands& h, Complex alpha,
                                                std::size_t n) {
    std::vector<Complex> sub(n, alpha * h.off), sup(n, alpha * h.off), diag(n);
    for (std::size_t j = 0; j < n; ++j) diag[j] = 1.0 + alpha * h.diag[j];
    const bool cyclic = h.bc == Boundary::Periodic;
    if (!cyclic) {
      sub[0] = 0.0;
      sup[n - 1] = 0.0;
    }
    return TridiagonalSolver<Complex>(std::move(sub), std::move(diag), std::move(sup), cyclic);
  }

  Grid1D grid_;
  HamiltonianBands bands_;
  Complex alpha_;
  TridiagonalSolver<Complex> solver_;
};

inline WaveFunction schrodinger_step(const WaveFunction& psi, const PhysicalParams& p,
                                     double dt, Boundary bc = Boundary::Periodic) {
  return CrankNicolson(psi.grid(), p, dt, bc).step(psi);
}

// ---------------------------------------------------------------------------
// Energy functional
//   E = sum_j rho_j [ (hbar^2/2m) (grad phi)^2 + (hbar^2/8m) (grad log rho)^2 + V_j ] dx
// summed over the support. When the state has vacuum tails the support is
// treated as its own open interval so tail values never enter the stencils.

inline double energy(const HydroState& h, const PhysicalParams& p,
                     Boundary bc = Boundary::Periodic) {
  const std::size_t lo = h.support_begin, hi = h.support_end;
  const std::size_t m = hi - lo;
  if (m < 4) throw NodeError("energy: support has fewer than 4 cells");
  const Boundary sub_bc = h.has_tails() ? Boundary::HardWall : bc;
  std::vector<double> log_rho(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (!(h.rho[lo + j] > 0.0)) throw NodeError("energy: rho <= 0 inside support");
    log_rho[j] = std::log(h.rho[lo + j]);
  }
  const double dx = h.grid.dx();
  const auto grad_phi =
      phase_gradient(std::span<const double>(h.phi).subspan(lo, m), dx, sub_bc);
  const auto grad_log = stencil::gradient(log_rho, dx, sub_bc);
  const double kin = p.hbar * p.hbar / (2 * p.mass);
  double e = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double x = h.grid.x(lo + j);
    e += h.rho[lo + j] * (kin * grad_phi[j] * grad_phi[j] +
                          0.25 * kin * grad_log[j] * grad_log[j] + p.potential(x));
  }
  return e * dx;
}

/// Energy of a wavefunction through its hydrodynamic form; sub-floor tails at
/// the grid ends are excluded.
inline double energy(const WaveFunction& psi, const PhysicalParams& p,
                     Boundary bc = Boundary::Periodic, double node_floor = 1e-12) {
  return energy(to_hydro(psi, {node_floor, TailPolicy::AllowVacuumTails}), p, bc);
}

// ---------------------------------------------------------------------------
// Madelung engine.

struct MadelungOptions {
  Boundary boundary = Boundary::Periodic;
  double node_floor = 1e-12;
  double c_stab = 0.1;
};

struct MadelungStep {
  HydroState state;
  /// sum(rho) dx - 1 before renormalization.
  double renorm_correction = 0.0;
};

/// RK4 on
///   d rho / dt = -grad(rho v),  v = (hbar/m) grad phi
///   d phi / dt = -[ (m/2) v^2 + V + Q ] / hbar,  Q = -(hbar^2/2m) lap(sqrt rho) / sqrt rho
/// On a non-periodic grid, sub-floor runs at the ends (and always the
/// outermost cell on each side) are vacuum: their log-density and phase are
/// extrapolated linearly from the support edge and they carry no dynamics.
class MadelungStepper {
 public:
  MadelungStepper(const Grid1D& grid, const PhysicalParams& p, double dt,
                  MadelungOptions opts = {})
      : grid_(grid), params_(p), dt_(dt), opts_(opts), potential_(p.potential_on(grid)) {
    p.validate();
    const double limit = opts.c_stab * p.mass * grid.dx() * grid.dx() / p.hbar;
    if (!(dt > 0.0)) throw RangeError("madelung: dt must be > 0");
    if (dt > limit) {
      throw StabilityError("madelung: dt = " + std::to_string(dt) +
                           " exceeds stability bound " + std::to_string(limit));
    }
  }

  MadelungStep step(const HydroState& h) const {
    const std::size_t n = grid_.size();
    std::vector<double> rho = h.rho, phi = h.phi;
    const Rates k1 = rates(rho, phi);
    const Rates k2 = rates(axpy(rho, 0.5 * dt_, k1.drho), axpy(phi, 0.5 * dt_, k1.dphi));
    const Rates k3 = rates(axpy(rho, 0.5 * dt_, k2.drho), axpy(phi, 0.5 * dt_, k2.dphi));
    const Rates k4 = rates(axpy(rho, dt_, k3.drho), axpy(phi, dt_, k3.dphi));
    for (std::size_t j = 0; j < n; ++j) {
      rho[j] += dt_ / 6 * (k1.drho[j] + 2 * k2.drho[j] + 2 * k3.drho[j] + k4.drho[j]);
      phi[j] += dt_ / 6 * (k1.dphi[j] + 2 * k2.dphi[j] + 2 * k3.dphi[j] + k4.dphi[j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(rho[j]) || !std::isfinite(phi[j])) {
        throw StabilityError("madelung: non-finite field at x = " + std::to_string(grid_.x(j)));
      }
    }
    const auto support = fill_tails(rho, phi);
    double total = 0.0;
    for (double r : rho) total += r;
    total *= grid_.dx();
    for (auto& r : rho) r /= total;

    MadelungStep out{HydroState(grid_, std::move(rho), std::move(phi)), total - 1.0};
    out.state.support_begin = support.begin;
    out.state.support_end = support.end;
    return out;
  }

  /// Applies the tail treatment in place and returns the support.
  detail::Support fill_tails(std::vector<double>& rho, std::vector<double>& phi) const {
    const std::size_t n = rho.size();
    if (opts_.boundary == Boundary::Periodic) {
      return detail::find_support(rho, opts_.node_floor, TailPolicy::Reject, grid_);
    }
    auto s = detail::find_support(rho, opts_.node_floor, TailPolicy::AllowVacuumTails, grid_);
    s.begin = std::max<std::size_t>(s.begin, 1);
    s.end = std::min(s.end, n - 1);
    if (s.end < s.begin + 4) throw NodeError("madelung: support has fewer than 4 cells");
    const std::size_t lo = s.begin, hi = s.end - 1;
    {
      const double slope = std::max(std::log(rho[lo + 1] / rho[lo]), 0.0);
      const double dphi = phi[lo + 1] - phi[lo];
      for (std::size_t j = 0; j < lo; ++j) {
        const double d = static_cast<double>(lo - j);
        rho[j] = rho[lo] * std::exp(-slope * d);
        phi[j] = phi[lo] - dphi * d;
      }
    }
    {
      const double slope = std::max(std::log(rho[hi - 1] / rho[hi]), 0.0);
      const double dphi = phi[hi] - phi[hi - 1];
      for (std::size_t j = hi + 1; j < n; ++j) {
        const double d = static_cast<double>(j - hi);
        rho[j] = rho[hi] * std::exp(-slope * d);
        phi[j] = phi[hi] + dphi * d;
      }
    }
    return s;
  }

 private:
  struct Rates {
    std::vector<double> drho;
    std::vector<double> dphi;
  };

  static std::vector<double> axpy(const std::vector<double>& y, double a,
                                  const std::vector<double>& x) {
    std::vector<double> out(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) out[j] = y[j] + a * x[j];
    return out;
  }

  Rates rates(std::vector<double> rho, std::vector<double> phi) const {
    const std::size_t n = rho.size();
    const auto s = fill_tails(rho, phi);
    const double dx = grid_.dx();
    const double hbar = params_.hbar, m = params_.mass;
    auto v = phase_gradient(phi, dx, opts_.boundary);
    for (auto& x : v) x *= hbar / m;
    std::vector<double> r(n);
    for (std::size_t j = 0; j < n; ++j) r[j] = std::sqrt(rho[j]);
    const bool periodic = opts_.boundary == Boundary::Periodic;
    auto left = [&](std::size_t j) { return j == 0 ? (periodic ? n - 1 : 0) : j - 1; };
    auto right = [&](std::size_t j) { return j + 1 == n ? (periodic ? 0 : n - 1) : j + 1; };

    Rates out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t j = s.begin; j < s.end; ++j) {
      const std::size_t l = left(j), rt = right(j);
      out.drho[j] = -(rho[rt] * v[rt] - rho[l] * v[l]) / (2 * dx);
      const double q = -(hbar * hbar / (2 * m)) * (r[rt] - 2 * r[j] + r[l]) / (dx * dx * r[j]);
      out.dphi[j] = -(0.5 * m * v[j] * v[j] + potential_[j] + q) / hbar;
      if (!std::isfinite(out.drho[j]) || !std::isfinite(out.dphi[j])) {
        throw StabilityError("madelung: non-finite rate at x = " + std::to_string(grid_.x(j)));
      }
    }
    return out;
  }

  Grid1D grid_;
  PhysicalParams params_;
  double dt_;
  MadelungOptions opts_;
  std::vector<double> potential_;
};

inline MadelungStep madelung_step(const HydroState& h, const PhysicalParams& p, double dt,
                                  const MadelungOptions& opts = {}) {
  return MadelungStepper(h.grid, p, dt, opts).step(h);
}

// ---------------------------------------------------------------------------
// Lowest eigenstate of the discrete Hamiltonian by shifted inverse iteration.

struct Eigenpair {
  WaveFunction state;
  double energy;
};

inline Eigenpair ground_state(const Grid1D& grid, const PhysicalParams& p,
                              Boundary bc = Boundary::HardWall, double tol = 1e-14) {
  p.validate();
  const HamiltonianBands h(grid, p, bc);
  const std::size_t n = grid.size();
  const double vmin = *std::min_element(h.diag.begin(), h.diag.end()) + 2 * h.off;
  auto rayleigh = [&](const std::vector<double>& f) {
    const auto hf = h.apply<double>(f);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      num += f[j] * hf[j];
      den += f[j] * f[j];
    }
    return num / den;
  };
  auto make = [&](double shift) {
    std::vector<double> sub(n, h.off), sup(n, h.off), diag(n);
    for (std::size_t j = 0; j < n; ++j) diag[j] = h.diag[j] - shift;
    const bool cyclic = bc == Boundary::Periodic;
    if (!cyclic) {
      sub[0] = 0.0;
      sup[n - 1] = 0.0;
    }
    return TridiagonalSolver<double>(std::move(sub), std::move(diag), std::move(sup), cyclic);
  };

  std::vector<double> f(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    f[j] = bc == Boundary::Periodic ? 1.0 : std::sin(std::numbers::pi * u);
  }
  auto normalize = [&](std::vector<double>& g) {
    double s = 0.0;
    for (double x : g) s += x * x;
    s = std::sqrt(s);
    for (auto& x : g) x /= s;
  };
  normalize(f);
  // Shift below the spectrum by the kinetic scale of the box so the
  // iteration ratio stays well below one for wells and open boxes alike.
  const double box = grid.length();
  const auto solver = make(vmin - p.hbar * p.hbar / (2 * p.mass * box * box));
  for (int it = 0; it < 5000; ++it) {
    auto g = solver.solve(f);
    normalize(g);
    double diff = 0.0;
    for (std::size_t j = 0; j < n; ++j) diff = std::max(diff, std::abs(g[j] - f[j]));
    f = std::move(g);
    if (diff < tol) break;
  }
  const double e = rayleigh(f);
  double sum = 0.0;
  for (double x : f) sum += x;
  if (sum < 0) {
    for (auto& x : f) x = -x;
  }
  std::vector<Complex> amps(f.begin(), f.end());
  return {WaveFunction::normalized(grid, std::move(amps)), e};
}

// ---------------------------------------------------------------------------
// Driver.

struct Snapshot {
  double t;
  std::variant<WaveFunction, HydroState> state;

  const Grid1D& grid() const {
    return std::visit([](const auto& s) -> const Grid1D& {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, WaveFunction>) {
        return s.grid();
      } else {
        return s.grid;
      }
    }, state);
  }

  std::vector<double> density() const {
    if (const auto* psi = std::get_if<WaveFunction>(&state)) return psi->density();
    return std::get<HydroState>(state).rho;
  }

  std::vector<double> phase() const {
    if (const auto* psi = std::get_if<WaveFunction>(&state)) return unwrapped_phase(*psi);
    return std::get<HydroState>(state).phi;
  }
};

struct Diagnostics {
  double t;
  double norm;               // sqrt(sum rho dx)
  double total_probability;  // sum rho dx
  double energy;             // NaN where the hydrodynamic functional is undefined
  double renorm_correction;  // accumulated since the previous snapshot
};

struct EvolutionTrace {
  Engine engine = Engine::Schrodinger;
  Boundary boundary = Boundary::Periodic;
  double node_floor = 1e-12;
  std::vector<Snapshot> snapshots;
  std::vector<Diagnostics> diagnostics;

  double t_begin() const { return snapshots.front().t; }
  double t_end() const { return snapshots.back().t; }
};

namespace detail {

inline Diagnostics diagnose(const Snapshot& s, const PhysicalParams& p, Boundary bc,
                            double node_floor, double renorm) {
  const auto rho = s.density();
  double total = 0.0;
  for (double r : rho) total += r;
  total *= s.grid().dx();
  double e = std::numeric_limits<double>::quiet_NaN();
  try {
    if (const auto* psi = std::get_if<WaveFunction>(&s.state)) {
      e = energy(*psi, p, bc, node_floor);
    } else {
      e = energy(std::get<HydroState>(s.state), p, bc);
    }
  } catch (const NodeError&) {
  }
  return {s.t, std::sqrt(total), total, e, renorm};
}

[[noreturn]] inline void rethrow_at(const Error& e, double t) {
  throw_error(e.kind(), std::string(e.what()) + " (at t = " + std::to_string(t) + ")");
}

}  // namespace detail

inline EvolutionTrace evolve(const WaveFunction& initial, const PhysicalParams& p,
                             const EvolutionConfig& cfg) {
  p.validate();
  const Grid1D& grid = initial.grid();
  cfg.validate(grid, p);
  if (std::abs(initial.total_probability() - 1.0) > 1e-10) {
    throw RangeError("evolve: initial state is not normalized");
  }
  const std::size_t steps = cfg.step_count();
  const double dt = cfg.effective_dt();

  EvolutionTrace trace;
  trace.engine = cfg.engine;
  trace.boundary = cfg.boundary;
  trace.node_floor = cfg.node_floor;
  auto record = [&](double t, auto state, double renorm) {
    trace.snapshots.push_back(Snapshot{t, std::move(state)});
    trace.diagnostics.push_back(
        detail::diagnose(trace.snapshots.back(), p, cfg.boundary, cfg.node_floor, renorm));
  };
  auto is_snapshot = [&](std::size_t k) { return k % cfg.snapshot_stride == 0 || k == steps; };

  if (cfg.engine == Engine::Schrodinger) {
    record(0.0, initial, 0.0);
    if (steps == 0) return trace;
    const CrankNicolson cn(grid, p, dt, cfg.boundary);
    WaveFunction psi = initial;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      try {
        psi = cn.step(psi);
      } catch (const Error& e) {
        detail::rethrow_at(e, t);
      }
      if (is_snapshot(k)) record(t, psi, 0.0);
    }
    return trace;
  }

  const TailPolicy tails =
      cfg.boundary == Boundary::HardWall ? TailPolicy::AllowVacuumTails : TailPolicy::Reject;
  HydroState h = [&] {
    try {
      return to_hydro(initial, {cfg.node_floor, tails});
    } catch (const Error& e) {
      detail::rethrow_at(e, 0.0);
    }
  }();
  const MadelungStepper stepper(grid, p, dt, {cfg.boundary, cfg.node_floor, cfg.c_stab});
  {
    // Establish the tail treatment on the initial state as well.
    auto rho = h.rho, phi = h.phi;
    const auto s = stepper.fill_tails(rho, phi);
    h = HydroState(grid, std::move(rho), std::move(phi));
    h.support_begin = s.begin;
    h.support_end = s.end;
  }
  record(0.0, h, 0.0);
  double renorm = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    try {
      auto out = stepper.step(h);
      h = std::move(out.state);
      renorm += out.renorm_correction;
    } catch (const Error& e) {
      detail::rethrow_at(e, t);
    }
    if (is_snapshot(k)) {
      record(t, h, renorm);
      renorm = 0.0;
    }
  }
  return trace;
}

/// L1 distance sum_j |a_j - b_j| dx.
inline double l1_distance(std::span<const double> a, std::span<const double> b, double dx) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
  return s * dx;
}

}  // namespace edsim

#endif  // EDSIM_DYNAMICS_HPP
