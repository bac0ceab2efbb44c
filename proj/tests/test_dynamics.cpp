#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "edsim/dynamics.hpp"
#include "oracles.hpp"

using namespace edsim;

namespace {

WaveFunction modulated_wave(const Grid1D& g, double k, double depth) {
  std::vector<Complex> a(g.size());
  const double q = 2 * std::numbers::pi / g.length();
  for (std::size_t j = 0; j < g.size(); ++j) {
    a[j] = (1.0 + depth * std::cos(q * g.x(j))) * std::polar(1.0, k * g.x(j));
  }
  return WaveFunction::normalized(g, std::move(a));
}

double l1_to_exact(const WaveFunction& psi, const oracle::FreeGaussian& ref, double t) {
  double s = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) s += std::abs(std::norm(psi[j]) - ref.density(psi.grid().x(j), t));
  return s * psi.grid().dx();
}

WaveFunction run_cn(const WaveFunction& psi0, const PhysicalParams& p, double dt, std::size_t steps, Boundary bc) {
  const CrankNicolson cn(psi0.grid(), p, dt, bc);
  WaveFunction psi = psi0;
  for (std::size_t k = 0; k < steps; ++k) psi = cn.step(psi);
  return psi;
}

}  // namespace

class CrankNicolsonNorm : public ::testing::TestWithParam<std::tuple<unsigned, Boundary>> {};

TEST_P(CrankNicolsonNorm, ConservesTotalProbability) {
  const auto [seed, bc] = GetParam();
  const Grid1D g(-5.0, 5.0, 96);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<Complex> a(g.size());
  for (auto& z : a) {
    const double re = n01(rng);
    z = {re, n01(rng)};
  }
  const auto psi0 = WaveFunction::normalized(g, a);
  const auto psi = run_cn(psi0, PhysicalParams::harmonic(1.7), 0.01, 300, bc);
  EXPECT_NEAR(psi.total_probability(), 1.0, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(RandomStates, CrankNicolsonNorm,
                         ::testing::Combine(::testing::Values(1u, 2u, 3u, 4u),
                                            ::testing::Values(Boundary::Periodic, Boundary::HardWall)));

TEST(CrankNicolson, FreeGaussianMatchesClosedFormWithSecondOrderError) {
  const oracle::FreeGaussian ref{0.0, 1.0, 1.0};
  const auto p = PhysicalParams::free();
  auto error = [&](std::size_t n) {
    const Grid1D g(-20.0, 20.0, n);
    std::vector<Complex> a(n);
    for (std::size_t j = 0; j < n; ++j) a[j] = ref.psi(g.x(j), 0.0);
    const auto psi = run_cn(WaveFunction::normalized(g, a), p, 2e-4, 5000, Boundary::HardWall);
    return l1_to_exact(psi, ref, 1.0);
  };
  const double e1 = error(512), e2 = error(1024);
  EXPECT_LT(e2, 5e-3);
  EXPECT_NEAR(e1 / e2, 4.0, 0.4);
}

TEST(CrankNicolson, DiscreteGroundStateOnlyRotatesPhase) {
  const Grid1D g(-8.0, 8.0, 256);
  const auto p = PhysicalParams::harmonic(1.0);
  const auto gs = ground_state(g, p);
  const double dt = 0.01;
  const auto psi = run_cn(gs.state, p, dt, 100, Boundary::HardWall);
  // CN advances an eigenvector by the Cayley factor (1 - i a E)/(1 + i a E), a = dt / 2hbar.
  const Complex a(0.0, 0.5 * dt * gs.energy / p.hbar);
  const Complex factor = std::pow((1.0 - a) / (1.0 + a), 100);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LT(std::abs(psi[j] - factor * gs.state[j]), 1e-10);
}

TEST(GroundState, DiscreteHarmonicEnergyApproachesHalfHbarOmega) {
  const auto p = PhysicalParams::harmonic(2.0);
  const auto gs = ground_state(Grid1D(-6.0, 6.0, 1024), p);
  EXPECT_NEAR(gs.energy, 1.0, 1e-4);
  EXPECT_NEAR(energy(gs.state, p, Boundary::HardWall), gs.energy, 1e-4);
}

TEST(Energy, FreeGaussianFunctional) {
  // E = hbar^2 k^2 / 2m + hbar^2 / (8 m sigma^2).
  const Grid1D g(-20.0, 20.0, 4096);
  const auto psi = gaussian_packet(g, 0.0, 1.0, 1.0);
  EXPECT_NEAR(energy(psi, PhysicalParams::free(), Boundary::HardWall), 0.625, 1e-5);
}

TEST(Energy, GridHamiltonianConservedToRoundoff) {
  const Grid1D g(-10.0, 10.0, 1024);
  const auto p = PhysicalParams::harmonic(1.0);
  const HamiltonianBands h(g, p, Boundary::HardWall);
  auto expectation = [&](const WaveFunction& psi) {
    const auto hpsi = h.apply(psi.amplitudes());
    Complex s = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) s += std::conj(psi[j]) * hpsi[j];
    return s.real() * g.dx();
  };
  const auto psi0 = coherent_state(g, p, 1.0, 0.0, 1.5);
  const auto psi = run_cn(psi0, p, 0.005, 1000, Boundary::HardWall);
  EXPECT_NEAR(expectation(psi), expectation(psi0), 1e-11);
}

TEST(Energy, FunctionalDriftBelowDiscretizationError) {
  const Grid1D g(-8.0, 8.0, 4096);
  const auto p = PhysicalParams::harmonic(1.0);
  const auto psi0 = coherent_state(g, p, 1.0, 0.0, 1.5);
  const double e0 = energy(psi0, p, Boundary::HardWall);
  EXPECT_NEAR(e0, 0.5 + 0.5 * 1.5 * 1.5, 1e-5);
  const auto psi = run_cn(psi0, p, 0.005, 1000, Boundary::HardWall);
  EXPECT_NEAR(energy(psi, p, Boundary::HardWall), e0, 1e-5);
}

TEST(Madelung, PlaneWaveKeepsUniformDensityAndAdvancesPhase) {
  const Grid1D g(0.0, 2 * std::numbers::pi, 64);
  const auto p = PhysicalParams::free();
  const double k = 3.0;
  HydroState h = to_hydro(plane_wave(g, k));
  const double dt = 0.05 * g.dx() * g.dx();
  const MadelungStepper stepper(g, p, dt, {Boundary::Periodic});
  const std::size_t steps = 200;
  const auto phi0 = h.phi;
  for (std::size_t s = 0; s < steps; ++s) h = stepper.step(h).state;
  const double t = dt * static_cast<double>(steps);
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_NEAR(h.rho[j], 1.0 / g.length(), 1e-13);
    EXPECT_NEAR(h.phi[j] - phi0[j], -0.5 * k * k * t, 1e-10);
  }
}

TEST(Madelung, DiscreteGroundStateIsStationary) {
  const Grid1D g(-8.0, 8.0, 256);
  const auto p = PhysicalParams::harmonic(1.0);
  const auto gs = ground_state(g, p);
  EvolutionConfig c;
  c.engine = Engine::Madelung;
  c.boundary = Boundary::HardWall;
  c.dt = c.stability_limit(g, p);
  c.t_final = 0.2;
  c.snapshot_stride = 1000000;
  const auto tr = evolve(gs.state, p, c);
  const auto& h0 = std::get<HydroState>(tr.snapshots.front().state);
  const auto& h1 = std::get<HydroState>(tr.snapshots.back().state);
  double drho = 0.0, rate_err = 0.0;
  const std::size_t mid = g.size() / 2;
  for (std::size_t j = h0.support_begin; j < h0.support_end; ++j) {
    drho = std::max(drho, std::abs(h1.rho[j] - h0.rho[j]));
  }
  rate_err = std::abs((h1.phi[mid] - h0.phi[mid]) / tr.snapshots.back().t + gs.energy / p.hbar);
  EXPECT_LT(drho, 1e-8);
  EXPECT_LT(rate_err, 1e-8);
}

TEST(Madelung, AgreesWithSchrodingerOnPeriodicNodelessState) {
  const Grid1D g(0.0, 10.0, 256);
  const auto p = PhysicalParams::free();
  const auto psi = modulated_wave(g, 2 * std::numbers::pi * 3 / 10.0, 0.4);
  EvolutionConfig c;
  c.t_final = 0.5;
  c.dt = c.stability_limit(g, p);
  c.snapshot_stride = 500;
  c.engine = Engine::Schrodinger;
  const auto a = evolve(psi, p, c);
  c.engine = Engine::Madelung;
  const auto b = evolve(psi, p, c);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    EXPECT_NEAR(a.snapshots[k].t, b.snapshots[k].t, 1e-12);
    EXPECT_LT(l1_distance(a.snapshots[k].density(), b.snapshots[k].density(), g.dx()), 1e-3);
  }
}

TEST(Madelung, StepAboveStabilityBoundIsRejected) {
  const Grid1D g(-5.0, 5.0, 64);
  const auto p = PhysicalParams::free();
  EvolutionConfig c;
  c.engine = Engine::Madelung;
  c.dt = 1.01 * c.stability_limit(g, p);
  EXPECT_THROW(evolve(gaussian_packet(g, 0, 1, 0), p, c), StabilityError);
  EXPECT_THROW(MadelungStepper(g, p, c.dt), StabilityError);
}

TEST(Madelung, InteriorNodeIsRejectedAtStart) {
  const Grid1D g(-5.0, 5.0, 101);
  const auto p = PhysicalParams::harmonic(1.0);
  EvolutionConfig c;
  c.engine = Engine::Madelung;
  c.boundary = Boundary::HardWall;
  c.dt = c.stability_limit(g, p);
  c.t_final = 0.01;
  EXPECT_THROW(evolve(harmonic_eigenstate(g, p, 1.0, 0.0, 1), p, c), NodeError);
}

TEST(Evolve, SnapshotScheduleAndDiagnostics) {
  const Grid1D g(-10.0, 10.0, 128);
  EvolutionConfig c;
  c.dt = 0.01;
  c.t_final = 1.0;
  c.snapshot_stride = 7;
  c.boundary = Boundary::HardWall;
  const auto tr = evolve(gaussian_packet(g, 0, 1, 0), PhysicalParams::free(), c);
  ASSERT_EQ(tr.snapshots.size(), 16u);  // 0, 7, ..., 98, and the final step 100
  ASSERT_EQ(tr.diagnostics.size(), tr.snapshots.size());
  EXPECT_DOUBLE_EQ(tr.t_begin(), 0.0);
  EXPECT_NEAR(tr.t_end(), 1.0, 1e-12);
  for (const auto& d : tr.diagnostics) {
    EXPECT_NEAR(d.norm, 1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(d.energy));
  }
}

TEST(Evolve, UnnormalizedInitialStateIsRejected) {
  const Grid1D g(-10.0, 10.0, 64);
  auto psi = gaussian_packet(g, 0, 1, 0);
  psi.mutable_amplitudes()[32] *= 2.0;
  EXPECT_THROW(evolve(psi, PhysicalParams::free(), EvolutionConfig{}), RangeError);
}

TEST(Evolve, EffectiveStepLandsOnFinalTime) {
  EvolutionConfig c;
  c.dt = 0.3;
  c.t_final = 1.0;
  EXPECT_EQ(c.step_count(), 4u);
  EXPECT_DOUBLE_EQ(c.effective_dt(), 0.25);
}
