#ifndef EDSIM_STATS_HPP
#define EDSIM_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "edsim/grid.hpp"

namespace edsim::stats {

/// One statistical check, serialized as {test, statistic, critical_value, n, pass}.
struct TestResult {
  std::string test;
  double statistic = 0.0;
  double critical_value = 0.0;
  std::size_t n = 0;
  bool pass = false;
  double p_value = -1.0;  // only set by tests that compute one
};

/// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double a = static_cast<double>(n), b = static_cast<double>(m);
  return 1.63 * std::sqrt((a + b) / (a * b));
}

/// sup_x |F_n(x) - F(x)| for a continuous reference CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
    d = std::max({d, hi - f, f - lo});
  }
  return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline TestResult ks_test(std::string name, const std::vector<double>& samples,
                          const std::function<double(double)>& cdf) {
  TestResult r{std::move(name), ks_statistic(samples, cdf), ks_critical_1pct(samples.size()),
               samples.size(), false};
  r.pass = r.statistic < r.critical_value;
  return r;
}

inline TestResult ks_test_two_sample(std::string name, const std::vector<double>& a,
                                     const std::vector<double>& b) {
  TestResult r{std::move(name), ks_two_sample(a, b), ks_critical_1pct(a.size(), b.size()),
               a.size() + b.size(), false};
  r.pass = r.statistic < r.critical_value;
  return r;
}

/// Pearson chi-square goodness of fit of `counts` against `probabilities`.
/// Bins with expected count below 5 are pooled. Passes when p > alpha.
inline TestResult chi_square_test(std::string name, std::span<const std::size_t> counts,
                                  std::span<const double> probabilities, double alpha = 0.01) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  const double total = static_cast<double>(n);
  std::vector<double> obs, exp;
  double pool_o = 0.0, pool_e = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probabilities[i] * total;
    if (e < 5.0) {
      pool_o += static_cast<double>(counts[i]);
      pool_e += e;
    } else {
      obs.push_back(static_cast<double>(counts[i]));
      exp.push_back(e);
    }
  }
  if (pool_e > 0.0 || pool_o > 0.0) {
    obs.push_back(pool_o);
    exp.push_back(pool_e);
  }
  TestResult r{std::move(name), 0.0, 0.0, n, false};
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (exp[i] <= 0.0) {
      r.statistic = obs[i] > 0.0 ? HUGE_VAL : r.statistic;
      continue;
    }
    r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  }
  const std::size_t bins = static_cast<std::size_t>(
      std::count_if(exp.begin(), exp.end(), [](double e) { return e > 0.0; }));
  if (bins < 2) {
    r.p_value = std::isfinite(r.statistic) ? 1.0 : 0.0;
    r.critical_value = 0.0;
    r.pass = r.statistic == 0.0;
    return r;
  }
  const double dof = static_cast<double>(bins - 1);
  boost::math::chi_squared dist(dof);
  r.critical_value = boost::math::quantile(boost::math::complement(dist, alpha));
  r.p_value = std::isfinite(r.statistic) ? boost::math::gamma_q(dof / 2, r.statistic / 2) : 0.0;
  r.pass = r.p_value > alpha;
  return r;
}

/// CDF of a piecewise-constant cell density (linear within each cell).
class CellCdf {
 public:
  CellCdf(const Grid1D& grid, std::span<const double> density) : grid_(grid), cum_(grid.size() + 1) {
    cum_[0] = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) cum_[j + 1] = cum_[j] + density[j] * grid.dx();
    const double total = cum_.back();
    for (auto& c : cum_) c /= total;
  }

  double operator()(double x) const {
    const double s = (x - grid_.x_min()) / grid_.dx();
    if (s <= 0.0) return 0.0;
    if (s >= static_cast<double>(grid_.size())) return 1.0;
    const auto j = static_cast<std::size_t>(s);
    const double w = s - static_cast<double>(j);
    return cum_[j] + w * (cum_[j + 1] - cum_[j]);
  }

 private:
  Grid1D grid_;
  std::vector<double> cum_;
};

}  // namespace edsim::stats

#endif  // EDSIM_STATS_HPP
