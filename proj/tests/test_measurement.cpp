#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "edsim/measurement.hpp"
#include "edsim/random.hpp"
#include "edsim/stats.hpp"
#include "oracles.hpp"

using namespace edsim;

namespace {

ComplexVector random_state(std::size_t n, std::uint64_t seed) {
  ComplexVector psi(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < psi.size(); ++j) {
    auto rng = stream(seed, "test_state", static_cast<std::uint64_t>(j));
    psi[j] = {rng.uniform() - 0.5, rng.uniform() - 0.5};
  }
  return psi.normalized();
}

ComplexMatrix hadamard() {
  const double s = 1.0 / std::sqrt(2.0);
  ComplexMatrix h(2, 2);
  h << s, s, s, -s;
  return h;
}

ComplexVector values(std::initializer_list<Complex> v) {
  ComplexVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto z : v) out[i++] = z;
  return out;
}

}  // namespace

TEST(Device, IdentityDeviceIsIdentity) {
  const auto dev = position_device(5);
  EXPECT_LT(max_abs_entry(dev.unitary - ComplexMatrix::Identity(5, 5)), 1e-15);
}

TEST(Device, HadamardMapsEigenvectorsToCells) {
  const auto dev = build_device(hadamard(), {1, 0}, values({1.0, -1.0}));
  const ComplexVector out = apply_device(dev, dev.basis.col(0));
  EXPECT_NEAR(std::abs(out[1]), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(out[0]), 0.0, 1e-15);
  EXPECT_EQ(dev.index_of_cell(0), 1u);
}

TEST(Device, FourierDeviceIsUnitary) {
  for (std::size_t n : {2u, 7u, 16u, 64u}) {
    const auto dev = fourier_device(n);
    const auto id = ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    EXPECT_LT(max_abs_entry(dev.unitary * dev.unitary.adjoint() - id), 1e-12) << n;
  }
}

TEST(Device, RejectsNonOrthonormalOrIncompleteBasis) {
  ComplexMatrix skew(2, 2);
  skew << 1.0, 0.6, 0.0, 0.8;
  EXPECT_THROW(build_device(skew, {0, 1}, values({0.0, 1.0})), BasisError);
  ComplexMatrix scaled = 2.0 * ComplexMatrix::Identity(3, 3);
  EXPECT_THROW(build_device(scaled, {0, 1, 2}, values({0.0, 1.0, 2.0})), BasisError);
  EXPECT_THROW(build_device(ComplexMatrix::Identity(2, 3), {0, 1}, values({0.0, 1.0})), BasisError);
  EXPECT_THROW(build_device(ComplexMatrix::Identity(2, 2), {0}, values({0.0, 1.0})), BasisError);
}

TEST(Device, RejectsBadTargetCells) {
  EXPECT_THROW(build_device(hadamard(), {0, 0}, values({1.0, -1.0})), CellError);
  EXPECT_THROW(build_device(hadamard(), {0, 2}, values({1.0, -1.0})), CellError);
}

TEST(Normality, ClassifiesStandardCases) {
  ComplexMatrix herm(2, 2);
  herm << 1.0, Complex(0, 2), Complex(0, -2), 3.0;
  EXPECT_TRUE(check_normal(herm));
  ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
  diag(0, 0) = 1.0;
  diag(1, 1) = Complex(0, 1);
  EXPECT_TRUE(check_normal(diag));
  ComplexMatrix jordan(2, 2);
  jordan << 1.0, 1.0, 0.0, 1.0;
  EXPECT_FALSE(check_normal(jordan));
  EXPECT_FALSE(check_normal(ComplexMatrix::Identity(2, 3)));
}

TEST(Normality, ObservableOfEveryDeviceIsNormalWithItsSpectrum) {
  const auto dev = build_device(fourier_device(6).basis, {5, 4, 3, 2, 1, 0},
                                values({Complex(0, 1), 2.0, -1.0, Complex(3, -4), 0.5, 7.0}));
  const ComplexMatrix a = observable(dev);
  EXPECT_TRUE(check_normal(a));
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_LT((a * dev.basis.col(i) - dev.eigenvalues[i] * dev.basis.col(i)).norm(), 1e-12);
  }
}

TEST(Born, EigenstatesGiveCertainOutcome) {
  const auto dev = fourier_device(8);
  for (Eigen::Index i = 0; i < 8; ++i) {
    const auto p = born_probabilities(dev, dev.basis.col(i));
    for (Eigen::Index k = 0; k < 8; ++k) EXPECT_NEAR(p[static_cast<std::size_t>(k)], k == i ? 1.0 : 0.0, 1e-14);
  }
}

TEST(Born, FourierProbabilitiesMatchDirectTransform) {
  const std::size_t n = 16;
  const auto dev = fourier_device(n);
  const auto psi = random_state(n, 4);
  const auto p = born_probabilities(dev, psi);
  for (std::size_t k = 0; k < n; ++k) {
    Complex c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      c += std::polar(1.0, -2 * std::numbers::pi * static_cast<double>(j * k) / n) * psi[static_cast<Eigen::Index>(j)];
    }
    EXPECT_NEAR(p[k], std::norm(c) / n, 1e-12);
  }
}

TEST(Born, CellProbabilitiesAfterDeviceEqualBornWeights) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 3 + seed % 9;
    ComplexMatrix q = Eigen::HouseholderQR<ComplexMatrix>(
                          [&] {
                            ComplexMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
                            auto rng = stream(seed, "qr", 0);
                            for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = {rng.uniform() - 0.5, rng.uniform() - 0.5};
                            return m;
                          }())
                          .householderQ();
    std::vector<std::size_t> cells(n);
    ComplexVector ev(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      cells[i] = (i * 5 + seed) % n;
      ev[static_cast<Eigen::Index>(i)] = static_cast<double>(i);
    }
    if (std::gcd(n, std::size_t{5}) != 1) std::iota(cells.begin(), cells.end(), std::size_t{0});
    const auto dev = build_device(q, cells, ev);
    const auto psi = random_state(n, seed + 100);
    const auto born = born_probabilities(dev, psi);
    const auto cellp = cell_probabilities(apply_device(dev, psi));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(cellp[cells[i]], born[i], 1e-12);
      total += born[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Simulate, EigenstateAlwaysGivesItsOutcome) {
  const auto dev = fourier_device(8);
  const auto records = simulate_measurement(dev, dev.basis.col(3), 1000, 1);
  for (const auto& r : records) {
    EXPECT_EQ(r.index, 3u);
    EXPECT_EQ(r.cell, 3u);
    EXPECT_EQ(r.eigenvalue, Complex(3.0));
  }
}

TEST(Simulate, EqualSuperpositionSplitsEvenly) {
  const auto dev = build_device(hadamard(), {0, 1}, values({1.0, -1.0}));
  const ComplexVector psi = (dev.basis.col(0) + dev.basis.col(1)).normalized();
  const auto counts = tally(simulate_measurement(dev, psi, 100000, 2), 2);
  EXPECT_NEAR(counts[0] / 1e5, 0.5, 0.01);
}

TEST(Simulate, FrequenciesPassChiSquare) {
  const auto dev = fourier_device(8);
  const auto psi = random_state(8, 5);
  for (auto sampler : {OutcomeSampler::Categorical, OutcomeSampler::Trajectory}) {
    const auto counts = tally(simulate_measurement(dev, psi, 100000, 6, sampler), 8);
    const auto r = stats::chi_square_test("born", counts, born_probabilities(dev, psi));
    EXPECT_TRUE(r.pass) << r.p_value;
  }
}

TEST(Simulate, DeterministicPerSeed) {
  const auto dev = fourier_device(4);
  const auto psi = random_state(4, 1);
  const auto a = simulate_measurement(dev, psi, 500, 9);
  const auto b = simulate_measurement(dev, psi, 500, 9);
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(a[t].index, b[t].index);
  EXPECT_THROW(simulate_measurement(dev, psi, 0, 9), RangeError);
  EXPECT_THROW(simulate_measurement(dev, random_state(5, 1), 10, 9), RangeError);
}

TEST(Simulate, RelabelingEigenvaluesLeavesIndexStatisticsUnchanged) {
  const auto base = fourier_device(6);
  const auto relabeled = build_device(base.basis, base.target_cells,
                                      values({Complex(0, 1), -3.0, 2.5, 100.0, Complex(-1, -1), 0.0}));
  const auto psi = random_state(6, 7);
  const auto a = simulate_measurement(base, psi, 2000, 11);
  const auto b = simulate_measurement(relabeled, psi, 2000, 11);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].index, b[t].index);
    EXPECT_EQ(b[t].eigenvalue, relabeled.eigenvalues[static_cast<Eigen::Index>(b[t].index)]);
  }
}

TEST(Collapse, PosteriorIsPointMassAndStateIsEigenvector) {
  const auto dev = build_device(fourier_device(4).basis, {2, 0, 3, 1}, values({0.0, 1.0, 2.0, 3.0}));
  const auto res = collapse_update(dev, 3);
  EXPECT_EQ(res.index, 2u);
  EXPECT_EQ(res.posterior, (std::vector<double>{0, 0, 1, 0}));
  EXPECT_LT((res.state - dev.basis.col(2)).norm(), 1e-15);
  const auto again = born_probabilities(dev, res.state);
  EXPECT_NEAR(again[2], 1.0, 1e-14);
  EXPECT_THROW(collapse_update(dev, 4), CellError);
}

TEST(Continuum, IdentityMapReproducesPositionDensity) {
  const Grid1D g(-6.0, 6.0, 600);
  const auto psi = gaussian_packet(g, 0.5, 1.0, 0.0);
  const auto d = continuum_pdf({[](double x) { return x; }, [](double) { return 1.0; }}, psi);
  const auto rho = psi.density();
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_DOUBLE_EQ(d.a[j], g.x(j));
    EXPECT_DOUBLE_EQ(d.rho_a[j], rho[j]);
  }
}

TEST(Continuum, AffineMapScalesDensity) {
  const Grid1D g(-8.0, 8.0, 4000);
  const auto psi = gaussian_packet(g, 1.0, 1.0, 2.0);
  const auto d = continuum_pdf({[](double x) { return -2 * x + 3; }, [](double) { return -2.0; }}, psi);
  // a = 3 - 2x: Gaussian with mean 1 and sd 2.
  EXPECT_NEAR(d.integral(), 1.0, 1e-6);
  for (double a : {-3.0, 0.0, 1.0, 4.0}) {
    const double expect = std::exp(-std::pow(a - 1.0, 2) / 8) / (2 * std::sqrt(2 * std::numbers::pi));
    const auto k = static_cast<std::size_t>(std::lower_bound(d.a.begin(), d.a.end(), a) - d.a.begin());
    EXPECT_NEAR(d.rho_a[k], expect, 2e-3);
  }
  EXPECT_NEAR(d.cdf(1.0), 0.5, 1e-3);
  EXPECT_NEAR(d.cdf(3.0), oracle::normal_cdf(3.0, 1.0, 2.0), 1e-3);
}

TEST(Continuum, NonMonotoneMapRaises) {
  const Grid1D g(-2.0, 2.0, 64);
  const auto psi = gaussian_packet(g, 0.0, 0.5, 0.0);
  EXPECT_THROW(continuum_pdf({[](double x) { return x * x; }, [](double x) { return 2 * x; }}, psi),
               MonotonicityError);
  EXPECT_THROW(continuum_pdf({[](double x) { return std::sin(3 * x); }, [](double x) { return 3 * std::cos(3 * x); }}, psi),
               MonotonicityError);
}

TEST(Continuum, AgreesWithDiscretizedObservableProbabilities) {
  // Binning the pushed-forward density on g-images of cell edges must agree
  // with the discrete cell probabilities of the same state.
  const Grid1D g(1.0, 3.0, 2000);
  const auto psi = gaussian_packet(g, 2.0, 0.2, 0.0);
  const auto d = continuum_pdf({[](double x) { return std::exp(x); }, [](double x) { return std::exp(x); }}, psi);
  const auto rho = psi.density();
  const std::size_t block = 100;
  for (std::size_t b = 1; b + 1 < g.size() / block; ++b) {
    double discrete = 0.0;
    for (std::size_t j = b * block; j < (b + 1) * block; ++j) discrete += rho[j] * g.dx();
    const double lo = std::exp(g.x(b * block) - g.dx() / 2);
    const double hi = std::exp(g.x((b + 1) * block) - g.dx() / 2);
    EXPECT_NEAR(d.cdf(hi) - d.cdf(lo), discrete, 2e-4) << b;
  }
}
