#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "edsim/grid.hpp"

using namespace edsim;

TEST(Grid, CellCentresAndSpacing) {
  const Grid1D g(-1.0, 1.0, 8);
  EXPECT_DOUBLE_EQ(g.dx(), 0.25);
  EXPECT_DOUBLE_EQ(g.x(0), -0.875);
  EXPECT_DOUBLE_EQ(g.x(7), 0.875);
  EXPECT_EQ(g.centers().size(), 8u);
  EXPECT_DOUBLE_EQ(g.length(), 2.0);
}

TEST(Grid, RejectsDegenerateInput) {
  EXPECT_THROW(Grid1D(0.0, 1.0, 7), RangeError);
  EXPECT_THROW(Grid1D(1.0, 1.0, 16), RangeError);
  EXPECT_THROW(Grid1D(0.0, NAN, 16), RangeError);
}

TEST(Grid, CellOfClampsToRange) {
  const Grid1D g(0.0, 8.0, 8);
  EXPECT_EQ(g.cell_of(0.0), 0u);
  EXPECT_EQ(g.cell_of(3.5), 3u);
  EXPECT_EQ(g.cell_of(-4.0), 0u);
  EXPECT_EQ(g.cell_of(8.0), 7u);
  EXPECT_EQ(g.cell_of(100.0), 7u);
}

TEST(Stencil, ExactOnQuadraticsWithWalls) {
  const Grid1D g(-2.0, 3.0, 20);
  std::vector<double> f(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = 3 * g.x(j) * g.x(j) - g.x(j) + 1;
  const auto grad = stencil::gradient(f, g.dx(), Boundary::HardWall);
  const auto lap = stencil::laplacian(f, g.dx(), Boundary::HardWall);
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_NEAR(grad[j], 6 * g.x(j) - 1, 1e-10) << "j = " << j;
    EXPECT_NEAR(lap[j], 6.0, 1e-8) << "j = " << j;
  }
}

TEST(Stencil, PeriodicSecondOrderConvergence) {
  auto error = [](std::size_t n) {
    const Grid1D g(0.0, 2 * std::numbers::pi, n);
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j) f[j] = std::sin(g.x(j));
    const auto lap = stencil::laplacian(f, g.dx(), Boundary::Periodic);
    const auto grad = stencil::gradient(f, g.dx(), Boundary::Periodic);
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      e = std::max({e, std::abs(lap[j] + std::sin(g.x(j))), std::abs(grad[j] - std::cos(g.x(j)))});
    }
    return e;
  };
  const double ratio = error(64) / error(128);
  EXPECT_NEAR(ratio, 4.0, 0.1);
}

TEST(PrincipalAngle, MapsIntoHalfOpenInterval) {
  for (double a : {0.0, 1.0, -1.0, 3.5, -3.5, 7.0, 100.0, -100.0, std::numbers::pi, -std::numbers::pi}) {
    const double p = principal_angle(a);
    EXPECT_GT(p, -std::numbers::pi - 1e-15);
    EXPECT_LE(p, std::numbers::pi + 1e-15);
    EXPECT_NEAR(std::remainder(a - p, 2 * std::numbers::pi), 0.0, 1e-12);
  }
}
