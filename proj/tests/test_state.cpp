#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "edsim/state.hpp"

using namespace edsim;

namespace {

double mean(const WaveFunction& psi) {
  double m = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) m += psi.grid().x(j) * std::norm(psi[j]);
  return m * psi.grid().dx();
}

double variance(const WaveFunction& psi) {
  const double mu = mean(psi);
  double v = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) v += std::pow(psi.grid().x(j) - mu, 2) * std::norm(psi[j]);
  return v * psi.grid().dx();
}

WaveFunction random_nodeless(const Grid1D& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 2.0), ph(-3.0, 3.0);
  std::vector<Complex> a(g.size());
  for (auto& z : a) {
    const double r = amp(rng);
    z = std::polar(r, ph(rng));
  }
  return WaveFunction::normalized(g, std::move(a));
}

}  // namespace

TEST(WaveFunction, NormalizeAndDensity) {
  const Grid1D g(0.0, 1.0, 16);
  auto psi = WaveFunction::normalized(g, std::vector<Complex>(16, Complex(3.0, 4.0)));
  EXPECT_NEAR(psi.total_probability(), 1.0, 1e-14);
  for (double r : psi.density()) EXPECT_NEAR(r, 1.0, 1e-14);
  EXPECT_THROW(WaveFunction::normalized(g, std::vector<Complex>(16)), RangeError);
  EXPECT_THROW(WaveFunction(g, std::vector<Complex>(3)), RangeError);
}

TEST(Presets, GaussianMomentsAndNormalization) {
  const Grid1D g(-20.0, 20.0, 2048);
  const auto psi = gaussian_packet(g, 1.5, 0.8, 2.0);
  EXPECT_NEAR(psi.total_probability(), 1.0, 1e-13);
  EXPECT_NEAR(mean(psi), 1.5, 1e-10);
  EXPECT_NEAR(variance(psi), 0.64, 1e-10);
}

TEST(Presets, HarmonicEigenstatesAreOrthonormal) {
  const Grid1D g(-10.0, 10.0, 2048);
  const auto p = PhysicalParams::harmonic(1.3);
  for (unsigned a = 0; a < 4; ++a) {
    for (unsigned b = 0; b < 4; ++b) {
      const auto pa = harmonic_eigenstate(g, p, 1.3, 0.0, a), pb = harmonic_eigenstate(g, p, 1.3, 0.0, b);
      Complex s = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) s += std::conj(pa[j]) * pb[j];
      EXPECT_NEAR(std::abs(s * g.dx()), a == b ? 1.0 : 0.0, 1e-10);
    }
  }
}

TEST(Presets, CoherentStateIsDisplacedGroundState) {
  const Grid1D g(-10.0, 10.0, 1024);
  const auto p = PhysicalParams::harmonic(2.0);
  const auto psi = coherent_state(g, p, 2.0, 0.0, 1.25);
  EXPECT_NEAR(mean(psi), 1.25, 1e-10);
  EXPECT_NEAR(variance(psi), p.hbar / (2 * p.mass * 2.0), 1e-10);
}

TEST(Hydro, RoundTripPreservesState) {
  const Grid1D g(0.0, 1.0, 64);
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const auto psi = random_nodeless(g, seed);
    const auto back = from_hydro(to_hydro(psi));
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LT(std::abs(back[j] - psi[j]), 1e-12);
  }
}

TEST(Hydro, PhaseIsUnwrappedAlongGrid) {
  const Grid1D g(0.0, 10.0, 200);
  const auto psi = plane_wave(g, 7.0);
  const auto phi = unwrapped_phase(psi);
  for (std::size_t j = 1; j < g.size(); ++j) EXPECT_NEAR(phi[j] - phi[j - 1], 7.0 * g.dx(), 1e-12);
}

TEST(Hydro, EntropyFieldIsPhasePlusHalfLogDensity) {
  const Grid1D g(0.0, 1.0, 32);
  const auto h = to_hydro(random_nodeless(g, 4));
  const auto s = entropy_field(h);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(s[j], h.phi[j] + 0.5 * std::log(h.rho[j]), 1e-14);
  EXPECT_NEAR(std::exp(2 * (s[3] - h.phi[3])), h.rho[3], 1e-14);
}

TEST(Hydro, InteriorNodeIsRejected) {
  const Grid1D g(-5.0, 5.0, 101);
  auto psi = harmonic_eigenstate(g, PhysicalParams::harmonic(1.0), 1.0, 0.0, 1);  // node at x = 0
  EXPECT_THROW(to_hydro(psi), NodeError);
  EXPECT_THROW(to_hydro(psi, {1e-12, TailPolicy::AllowVacuumTails}), NodeError);
}

TEST(Hydro, VacuumTailsAreReportedAsOutsideSupport) {
  const Grid1D g(-20.0, 20.0, 256);
  const auto psi = gaussian_packet(g, 0.0, 1.0, 0.0);
  EXPECT_THROW(to_hydro(psi), NodeError);
  const auto h = to_hydro(psi, {1e-12, TailPolicy::AllowVacuumTails});
  EXPECT_TRUE(h.has_tails());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const bool inside = j >= h.support_begin && j < h.support_end;
    EXPECT_EQ(inside, h.rho[j] >= 1e-12) << j;
  }
}

TEST(Hydro, EntropyUndefinedAtZeroDensity) {
  const Grid1D g(0.0, 1.0, 8);
  HydroState h(g, std::vector<double>(8, 1.0), std::vector<double>(8, 0.0));
  h.rho[2] = 0.0;
  EXPECT_THROW(entropy_field(h), NodeError);
}

TEST(Velocity, PlaneWaveMovesAtHbarKOverM) {
  const double L = 2 * std::numbers::pi;
  const Grid1D g(0.0, L, 64);
  const PhysicalParams p{0.7, 1.9, [](double) { return 0.0; }};
  const double k = 5.0;  // commensurate with the box
  const auto h = to_hydro(plane_wave(g, k));
  for (Boundary bc : {Boundary::Periodic, Boundary::HardWall}) {
    for (double v : current_velocity(h, p, bc)) EXPECT_NEAR(v, p.hbar * k / p.mass, 1e-10);
  }
}

TEST(Velocity, GlobalPhaseDoesNotChangeVelocity) {
  const Grid1D g(-10.0, 10.0, 128);
  const auto p = PhysicalParams::free();
  const auto psi = gaussian_packet(g, 0.0, 2.0, 1.5);
  const HydroOptions opts{1e-300, TailPolicy::Reject};
  const auto a = current_velocity(to_hydro(psi, opts), p, Boundary::HardWall);
  const auto b = current_velocity(to_hydro(psi.with_global_phase(2.5), opts), p, Boundary::HardWall);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-9);
}

TEST(PhysicalParams, Validation) {
  EXPECT_THROW((PhysicalParams{0.0, 1.0}.validate()), RangeError);
  EXPECT_THROW((PhysicalParams{1.0, -1.0}.validate()), RangeError);
  const PhysicalParams bad{1.0, 1.0, [](double x) { return x > 0.5 ? std::nan("") : 0.0; }};
  EXPECT_THROW(bad.potential_on(Grid1D(-1.0, 1.0, 8)), RangeError);
}
