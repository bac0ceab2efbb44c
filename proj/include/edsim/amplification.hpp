#ifndef EDSIM_AMPLIFICATION_HPP
#define EDSIM_AMPLIFICATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edsim/error.hpp"
#include "edsim/measurement.hpp"
#include "edsim/random.hpp"
#include "edsim/stats.hpp"

namespace edsim {

/// L(r, i) = P(pointer reads r | particle detected in cell i).
struct LikelihoodModel {
  Eigen::MatrixXd matrix;

  std::size_t pointer_values() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t cells() const { return static_cast<std::size_t>(matrix.cols()); }

  double operator()(std::size_t r, std::size_t i) const {
    return matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
  }

  /// Entries in [0, 1] and every column summing to 1 within tol.
  void validate(double tol = 1e-12) const {
    if (matrix.rows() == 0 || matrix.cols() == 0) throw RangeError("likelihood matrix is empty");
    for (Eigen::Index i = 0; i < matrix.cols(); ++i) {
      for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        const double v = matrix(r, i);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw RangeError("likelihood entry (" + std::to_string(r) + ", " + std::to_string(i) +
                           ") outside [0, 1]");
        }
      }
      if (std::abs(matrix.col(i).sum() - 1.0) > tol) {
        throw RangeError("likelihood column " + std::to_string(i) + " does not sum to 1");
      }
    }
  }
};

inline LikelihoodModel ideal_likelihood(std::size_t n) {
  if (n == 0) throw RangeError("ideal likelihood: n must be >= 1");
  const auto N = static_cast<Eigen::Index>(n);
  return {Eigen::MatrixXd::Identity(N, N)};
}

/// Correct reading with probability 1 - eps, error mass spread evenly.
inline LikelihoodModel noisy_likelihood(std::size_t n, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw RangeError("noisy likelihood: epsilon must lie in [0, 1)");
  if (n < 2) throw RangeError("noisy likelihood: n must be >= 2");
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(N, N, epsilon / static_cast<double>(n - 1));
  m.diagonal().setConstant(1.0 - epsilon);
  return {std::move(m)};
}

struct Posterior {
  std::vector<double> probabilities;
  std::size_t observed_r = 0;

  /// Most probable cell; ties go to the lowest index.
  std::size_t map_index() const {
    return static_cast<std::size_t>(
        std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
  }
};

/// posterior_i = prior_i L(r, i) / sum_k prior_k L(r, k).
inline Posterior bayes_update(std::span<const double> prior, const LikelihoodModel& L, std::size_t r) {
  if (prior.size() != L.cells()) throw RangeError("prior length does not match likelihood columns");
  if (r >= L.pointer_values()) throw RangeError("pointer value " + std::to_string(r) + " out of range");
  Posterior post{std::vector<double>(prior.size()), r};
  double evidence = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    post.probabilities[i] = prior[i] * L(r, i);
    evidence += post.probabilities[i];
  }
  if (!(evidence > 0.0)) {
    throw ZeroEvidenceError("pointer value " + std::to_string(r) + " has zero probability under the model");
  }
  for (auto& p : post.probabilities) p /= evidence;
  return post;
}

/// Categorical draw from column i of L.
template <typename Rng>
std::size_t simulate_pointer(std::size_t i, const LikelihoodModel& L, Rng& rng) {
  if (i >= L.cells()) throw RangeError("cell index " + std::to_string(i) + " out of range");
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t r = 0; r < L.pointer_values(); ++r) {
    const double w = L(r, i);
    if (w <= 0.0) continue;
    acc += w;
    last = r;
    if (u < acc) return r;
  }
  return last;
}

inline std::size_t simulate_pointer(std::size_t i, const LikelihoodModel& L, std::uint64_t seed) {
  auto rng = stream(seed, "pointer", i);
  return simulate_pointer(i, L, rng);
}

/// L * p: the pointer marginal implied by cell probabilities p.
inline std::vector<double> pointer_marginal(const LikelihoodModel& L, std::span<const double> p) {
  std::vector<double> out(L.pointer_values(), 0.0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t i = 0; i < p.size(); ++i) out[r] += L(r, i) * p[i];
  }
  return out;
}

struct TrialRecord {
  std::size_t trial;
  std::size_t true_i;
  std::size_t observed_r;
  std::vector<double> posterior;
  std::size_t map_i;
};

struct ExperimentLog {
  std::vector<TrialRecord> trials;
  std::vector<double> born;
  std::vector<double> prior;
  double map_error_rate = 0.0;
  stats::TestResult pointer_fit;
};

/// Born-samples the detection cell, reads the pointer, and infers the cell.
/// Only the sampled cell index reaches the amplifier stage.
inline ExperimentLog end_to_end(const ComplexVector& psi, const DiscreteDevice& dev, const LikelihoodModel& L,
                                std::size_t n_trials, std::uint64_t seed,
                                std::optional<std::vector<double>> prior = std::nullopt) {
  L.validate();
  if (L.cells() != dev.dim) throw RangeError("likelihood columns do not match device dimension");
  ExperimentLog log;
  log.born = born_probabilities(dev, psi);
  log.prior = prior ? std::move(*prior) : log.born;
  if (log.prior.size() != dev.dim) throw RangeError("prior length does not match device dimension");

  const auto outcomes = simulate_measurement(dev, psi, n_trials, derive_seed(seed, "born"));
  std::vector<std::size_t> pointer_counts(L.pointer_values(), 0);
  std::size_t errors = 0;
  log.trials.reserve(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t) {
    const std::size_t i = outcomes[t].index;
    auto rng = stream(seed, "pointer", t);
    const std::size_t r = simulate_pointer(i, L, rng);
    auto post = bayes_update(log.prior, L, r);
    const std::size_t map_i = post.map_index();
    errors += map_i != i;
    ++pointer_counts[r];
    log.trials.push_back({t, i, r, std::move(post.probabilities), map_i});
  }
  log.map_error_rate = static_cast<double>(errors) / static_cast<double>(n_trials);
  log.pointer_fit = stats::chi_square_test("pointer_marginal_chi2", pointer_counts, pointer_marginal(L, log.born));
  return log;
}

}  // namespace edsim

#endif  // EDSIM_AMPLIFICATION_HPP
