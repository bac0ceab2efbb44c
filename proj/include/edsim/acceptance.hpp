#ifndef EDSIM_ACCEPTANCE_HPP
#define EDSIM_ACCEPTANCE_HPP

// The acceptance suite run by `edsim validate` and the acceptance test binary.
// Each criterion prints one PASS/FAIL row with the measured quantity and the
// threshold it was held to.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "edsim/amplification.hpp"
#include "edsim/commands.hpp"
#include "edsim/config.hpp"
#include "edsim/dynamics.hpp"
#include "edsim/io.hpp"
#include "edsim/measurement.hpp"
#include "edsim/random.hpp"
#include "edsim/stats.hpp"
#include "edsim/trajectories.hpp"

namespace edsim::acceptance {

struct Options {
  std::string filter;                // comma-separated ids or name fragments; empty runs all
  std::optional<double> inject_dt;   // overrides the time step of the engine-equivalence run
  std::uint64_t seed = 20240611;
  std::filesystem::path work_dir;    // scratch space for the reproducibility check
};

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline Result start(int id, std::string name) {
  Result r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

inline std::string sci(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

inline double variance(const std::vector<double>& rho, const Grid1D& g) {
  double mean = 0.0, mass = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    mass += rho[j] * g.dx();
    mean += g.x(j) * rho[j] * g.dx();
  }
  mean /= mass;
  double var = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) var += (g.x(j) - mean) * (g.x(j) - mean) * rho[j] * g.dx();
  return var / mass;
}

/// Free packet used by the spreading, equivalence and convergence checks.
struct FreePacketSetup {
  static constexpr double x_min = -20.0, x_max = 20.0, sigma0 = 1.0, k = 1.0, t_final = 2.0;

  static double exact_variance(double t) {
    const double s = t / (2 * sigma0 * sigma0);
    return sigma0 * sigma0 * (1 + s * s);
  }

  static EvolutionConfig config(Engine e, double dt) {
    EvolutionConfig c;
    c.dt = dt;
    c.t_final = t_final;
    c.engine = e;
    c.boundary = Boundary::HardWall;
    const std::size_t steps = c.step_count();
    c.snapshot_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 / c.effective_dt())));
    c.snapshot_stride = std::min(c.snapshot_stride, std::max<std::size_t>(steps, 1));
    return c;
  }

  /// Madelung stability limit on the criterion grid.
  static double default_dt(std::size_t n) {
    return EvolutionConfig{}.stability_limit(Grid1D(x_min, x_max, n), PhysicalParams::free());
  }
};

class Suite {
 public:
  explicit Suite(Options opts) : opts_(std::move(opts)) {}

  const EvolutionTrace& schrodinger_trace(std::size_t n) {
    auto it = schrodinger_.find(n);
    if (it != schrodinger_.end()) return it->second;
    const Grid1D g(FreePacketSetup::x_min, FreePacketSetup::x_max, n);
    const double dt = n == 1024 && opts_.inject_dt ? *opts_.inject_dt : FreePacketSetup::default_dt(1024);
    auto trace = evolve(gaussian_packet(g, 0.0, FreePacketSetup::sigma0, FreePacketSetup::k), PhysicalParams::free(),
                        FreePacketSetup::config(Engine::Schrodinger, dt));
    return schrodinger_.emplace(n, std::move(trace)).first->second;
  }

  double spreading_error(std::size_t n) {
    const auto& tr = schrodinger_trace(n);
    const auto& last = tr.snapshots.back();
    const double v = variance(last.density(), last.grid());
    const double exact = FreePacketSetup::exact_variance(last.t);
    return (v - exact) / exact;
  }

  Result engine_equivalence() {
    Result r = start(1, "engine_equivalence");
    const auto t0 = std::chrono::steady_clock::now();
    const Grid1D g(FreePacketSetup::x_min, FreePacketSetup::x_max, 1024);
    const double dt = opts_.inject_dt.value_or(FreePacketSetup::default_dt(1024));
    const auto psi = gaussian_packet(g, 0.0, FreePacketSetup::sigma0, FreePacketSetup::k);
    const auto& a = schrodinger_trace(1024);
    const auto b = evolve(psi, PhysicalParams::free(), FreePacketSetup::config(Engine::Madelung, dt));
    double worst = 0.0;
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
      worst = std::max(worst, l1_distance(a.snapshots[k].density(), b.snapshots[k].density(), g.dx()));
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = worst < 1e-3 && r.seconds < 60.0;
    r.detail = "max L1(rho) over " + std::to_string(a.snapshots.size()) + " snapshots = " + sci(worst) +
               " (< 1e-3); runtime " + sci(r.seconds, 2) + " s (< 60 s)";
    return r;
  }

  Result analytic_spreading() {
    Result r = start(2, "analytic_spreading");
    const double err = spreading_error(1024);
    r.pass = std::abs(err) < 1e-4;
    r.detail = "relative variance error at t = 2: " + sci(err) + " (|err| < 1e-4)";
    return r;
  }

  Result energy_conservation() {
    Result r = start(3, "energy_conservation");
    const double omega = 1.0;
    const auto p = PhysicalParams::harmonic(omega);
    const Grid1D g(-8.0, 8.0, 4096);
    const double dt = 0.005;
    const double periods = 5.0;
    const auto steps = static_cast<std::size_t>(std::ceil(periods * 2 * std::numbers::pi / omega / dt));
    const CrankNicolson cn(g, p, dt, Boundary::HardWall);
    WaveFunction psi = coherent_state(g, p, omega, 0.0, 1.0);
    const double e0 = energy(psi, p, Boundary::HardWall);
    double drift = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      psi = cn.step(psi);
      drift = std::max(drift, std::abs(energy(psi, p, Boundary::HardWall) - e0) / std::abs(e0));
    }
    const Grid1D gg(-8.0, 8.0, 1024);
    const double e_func = energy(harmonic_eigenstate(gg, p, omega, 0.0, 0), p, Boundary::HardWall);
    const double e_eig = ground_state(gg, p, Boundary::HardWall).energy;
    const double half = 0.5 * p.hbar * omega;
    const double err_func = std::abs(e_func - half) / half;
    const double err_eig = std::abs(e_eig - half) / half;
    r.pass = drift < 1e-5 && err_func < 1e-4 && err_eig < 1e-4;
    r.detail = "coherent-state max |dE|/E0 over " + std::to_string(steps) + " steps = " + sci(drift) +
               " (< 1e-5); ground state rel. error: functional " + sci(err_func) + ", eigenvalue " +
               sci(err_eig) + " (< 1e-4)";
    return r;
  }

  Result trajectory_marginal() {
    Result r = start(4, "trajectory_marginal");
    const auto t0 = std::chrono::steady_clock::now();
    const Grid1D g(-20.0, 20.0, 1024);
    const auto p = PhysicalParams::free();
    EvolutionConfig c;
    c.dt = 1e-3;
    c.t_final = 1.0;
    c.boundary = Boundary::HardWall;
    const auto trace = evolve(gaussian_packet(g, 0.0, 1.0, 1.0), p, c);
    const FlowFields fields(trace, p);
    const std::size_t n = 100000;
    const auto start = sample_initial(trace.snapshots.front().density(), g, n, derive_seed(opts_.seed, "c4"));
    const auto flow = advance_ensemble(start, fields, c.dt, SamplerMode::CurrentFlow, 1000);
    const auto diff = advance_ensemble(start, fields, c.dt, SamplerMode::EntropicDiffusion, 1000);
    const stats::CellCdf cdf(g, trace.snapshots.back().density());
    const auto ka = stats::ks_test("current_flow", flow.positions, cdf);
    const auto kb = stats::ks_test("entropic_diffusion", diff.positions, cdf);
    const auto kab = stats::ks_test_two_sample("modes", flow.positions, diff.positions);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = ka.pass && kb.pass && kab.pass && r.seconds < 120.0;
    r.detail = "KS flow " + sci(ka.statistic) + ", diffusion " + sci(kb.statistic) + " (< " + sci(ka.critical_value) +
               "); two-sample " + sci(kab.statistic) + " (< " + sci(kab.critical_value) + "); runtime " +
               sci(r.seconds, 2) + " s (< 120 s)";
    return r;
  }

  ComplexVector random_state(std::size_t n, std::string_view tag) const {
    ComplexVector psi(static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < psi.size(); ++j) {
      auto rng = stream(opts_.seed, tag, static_cast<std::uint64_t>(j));
      std::normal_distribution<double> normal;
      const double re = normal(rng);
      const double im = normal(rng);
      psi[j] = {re, im};
    }
    return psi / psi.norm();
  }

  Result discrete_born() {
    Result r = start(5, "discrete_born");
    const auto dev = fourier_device(16);
    const auto psi = random_state(16, "c5_state");
    const auto p = born_probabilities(dev, psi);
    const auto after = cell_probabilities(apply_device(dev, psi));
    double exact = 0.0;
    for (std::size_t i = 0; i < dev.dim; ++i) exact = std::max(exact, std::abs(after[dev.target_cells[i]] - p[i]));
    const auto records = simulate_measurement(dev, psi, 100000, derive_seed(opts_.seed, "c5"));
    const auto chi = stats::chi_square_test("born", tally(records, dev.dim), p);
    r.pass = chi.p_value > 0.01 && exact < 1e-12;
    r.detail = "chi2 = " + sci(chi.statistic) + ", p = " + sci(chi.p_value) + " (> 0.01); max ||U psi|^2 - p| = " +
               sci(exact) + " (< 1e-12)";
    return r;
  }

  Result continuum_born() {
    Result r = start(6, "continuum_born");
    const double mu = 6.0, sigma = 0.5;
    const Grid1D g(2.0, 10.0, 16384);
    const auto psi = gaussian_packet(g, mu, sigma, 0.0);
    const ContinuumDevice cube{[](double x) { return x * x * x; }, [](double x) { return 3 * x * x; }};
    const auto dens = continuum_pdf(cube, psi);
    const double norm_err = std::abs(dens.integral() - 1.0);
    const std::size_t n = 1000000;
    std::vector<double> pushed(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto rng = stream(opts_.seed, "c6", i);
      std::normal_distribution<double> normal(mu, sigma);
      const double x = normal(rng);
      pushed[i] = x * x * x;
    }
    const auto ks = stats::ks_test("pushforward", pushed, [&](double a) { return dens.cdf(a); });
    r.pass = norm_err < 1e-8 && ks.pass;
    r.detail = "|integral - 1| = " + sci(norm_err) + " (< 1e-8); KS vs 1e6 push-forward samples = " +
               sci(ks.statistic) + " (< " + sci(ks.critical_value) + ")";
    return r;
  }

  DiscreteDevice random_device(std::size_t n) const {
    const auto N = static_cast<Eigen::Index>(n);
    ComplexMatrix m(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
      for (Eigen::Index j = 0; j < N; ++j) {
        auto rng = stream(opts_.seed, "c7_matrix", static_cast<std::uint64_t>(i * N + j));
        std::normal_distribution<double> normal;
        const double re = normal(rng);
        const double im = normal(rng);
        m(i, j) = {re, im};
      }
    }
    const ComplexMatrix q = Eigen::HouseholderQR<ComplexMatrix>(m).householderQ();
    ComplexVector ev(N);
    std::vector<std::size_t> cells(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto rng = stream(opts_.seed, "c7_eigen", i);
      ev[static_cast<Eigen::Index>(i)] = {rng.uniform() * 4 - 2, rng.uniform() * 4 - 2};
      cells[i] = (i * 5 + 3) % n;  // a permutation when gcd(5, n) = 1
    }
    return build_device(q, cells, ev);
  }

  Result normality() {
    Result r = start(7, "normality");
    const std::vector<DiscreteDevice> devices = {position_device(8), fourier_device(16), random_device(6),
                                                 random_device(12)};
    bool all = true;
    double worst = 0.0;
    for (const auto& d : devices) {
      const ComplexMatrix a = observable(d);
      all = all && check_normal(a);
      worst = std::max(worst, max_abs_entry(a * a.adjoint() - a.adjoint() * a));
    }
    ComplexMatrix jordan(2, 2);
    jordan << 0.0, 1.0, 0.0, 0.0;
    const bool jordan_rejected = !check_normal(jordan);
    r.pass = all && jordan_rejected;
    r.detail = std::to_string(devices.size()) + " device observables normal (worst |AA+ - A+A| = " + sci(worst) +
               ", < 1e-10): " + (all ? "yes" : "no") + "; Jordan block rejected: " +
               (jordan_rejected ? "yes" : "no");
    return r;
  }

  Result bayes_amplification() {
    Result r = start(8, "bayes_amplification");
    const std::size_t n = 100000;
    const auto dev16 = fourier_device(16);
    const auto ideal = end_to_end(random_state(16, "c8_state"), dev16, ideal_likelihood(16), n,
                                  derive_seed(opts_.seed, "c8_ideal"));
    bool point_mass = true;
    for (const auto& t : ideal.trials) point_mass = point_mass && t.posterior[t.true_i] == 1.0;

    ComplexMatrix h(2, 2);
    h << 1.0, 1.0, 1.0, -1.0;
    h /= std::sqrt(2.0);
    ComplexVector ev(2);
    ev << 1.0, -1.0;
    const auto dev2 = build_device(h, {0, 1}, ev);
    const ComplexVector equal = (dev2.basis.col(0) + dev2.basis.col(1)) / std::sqrt(2.0);
    const double eps = 0.1;
    const auto noisy = end_to_end(equal, dev2, noisy_likelihood(2, eps), n, derive_seed(opts_.seed, "c8_noisy"));
    const double bound = 4 * std::sqrt(eps * (1 - eps) / static_cast<double>(n));

    // Brute-force joint table P(i, r) for the 3-cell case.
    const std::vector<double> prior = {0.5, 0.3, 0.2};
    const auto L3 = noisy_likelihood(3, eps);
    double table_err = 0.0;
    for (std::size_t obs = 0; obs < 3; ++obs) {
      double joint[3][3];
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t rr = 0; rr < 3; ++rr) joint[i][rr] = prior[i] * (rr == i ? 1 - eps : eps / 2);
      }
      const double evidence = joint[0][obs] + joint[1][obs] + joint[2][obs];
      const auto post = bayes_update(prior, L3, obs);
      for (std::size_t i = 0; i < 3; ++i) {
        table_err = std::max(table_err, std::abs(post.probabilities[i] - joint[i][obs] / evidence));
      }
    }
    r.pass = ideal.map_error_rate == 0.0 && point_mass && std::abs(noisy.map_error_rate - eps) < bound &&
             table_err < 1e-12;
    r.detail = "ideal error rate " + sci(ideal.map_error_rate) + " (== 0); noisy MAP error " +
               sci(noisy.map_error_rate) + " (|.-0.1| < " + sci(bound) + "); joint-table max diff " +
               sci(table_err) + " (< 1e-12)";
    return r;
  }

  Result reproducibility() {
    Result r = start(9, "reproducibility");
    namespace fs = std::filesystem;
    const fs::path root = opts_.work_dir.empty() ? fs::temp_directory_path() / "edsim_repro" : opts_.work_dir;
    RunConfig c;
    c.seed = opts_.seed;
    c.grid.x_min = -10;
    c.grid.x_max = 10;
    c.grid.n = 256;
    c.evolution.engine = "both";
    c.evolution.dt = 5e-4;
    c.evolution.t_final = 0.2;
    c.evolution.snapshot_stride = 40;
    c.sampler.particles = 2000;
    c.sampler.record_stride = 100;
    c.measurement.trials = 20000;
    c.amplification.likelihood = "noisy";
    c.amplification.trials = 20000;

    using Cmd = int (*)(const RunConfig&);
    const std::vector<std::pair<std::string, Cmd>> cmds = {
        {"evolve", cmd_evolve}, {"trajectories", cmd_trajectories}, {"measure", cmd_measure}, {"amplify", cmd_amplify}};
    std::size_t files = 0;
    std::string mismatch;
    for (const auto& [name, cmd] : cmds) {
      c.output_dir = (root / name).string();
      std::error_code ec;
      fs::remove_all(c.output_dir, ec);
      std::map<std::string, std::string> first;
      for (int run = 0; run < 2; ++run) {
        if (cmd(c) != kExitOk) {
          mismatch += name + " failed; ";
          break;
        }
        for (const auto& entry : fs::directory_iterator(c.output_dir)) {
          const std::string key = entry.path().filename().string();
          const std::string bytes = io::read_file(entry.path());
          if (run == 0) {
            first[key] = bytes;
          } else if (first[key] != bytes) {
            mismatch += name + "/" + key + " differs; ";
          }
        }
      }
      files += first.size();
      fs::remove_all(c.output_dir, ec);
    }
    r.pass = mismatch.empty() && files > 0;
    r.detail = std::to_string(files) + " output files across 4 commands, rerun byte-identical: " +
               (mismatch.empty() ? std::string("yes") : "no (" + mismatch + ")");
    return r;
  }

  Result convergence_order() {
    Result r = start(10, "convergence_order");
    const double e1 = spreading_error(1024), e2 = spreading_error(2048);
    const double ratio = std::abs(e1) / std::abs(e2);
    r.pass = ratio >= 3.0 && ratio <= 5.0;
    r.detail = "variance error n=1024: " + sci(e1) + ", n=2048: " + sci(e2) + ", ratio " + sci(ratio) + " (in [3, 5])";
    return r;
  }

 private:
  Options opts_;
  std::map<std::size_t, EvolutionTrace> schrodinger_;
};

}  // namespace detail

struct Criterion {
  int id;
  std::string name;
  Result (detail::Suite::*run)();
};

inline const std::vector<Criterion>& criteria() {
  using S = detail::Suite;
  static const std::vector<Criterion> list = {
      {1, "engine_equivalence", &S::engine_equivalence},   {2, "analytic_spreading", &S::analytic_spreading},
      {3, "energy_conservation", &S::energy_conservation}, {4, "trajectory_marginal", &S::trajectory_marginal},
      {5, "discrete_born", &S::discrete_born},             {6, "continuum_born", &S::continuum_born},
      {7, "normality", &S::normality},                     {8, "bayes_amplification", &S::bayes_amplification},
      {9, "reproducibility", &S::reproducibility},         {10, "convergence_order", &S::convergence_order},
  };
  return list;
}

inline bool selected(const Criterion& c, const std::string& filter) {
  if (filter.empty()) return true;
  for (const auto& part : io::split(filter, ',')) {
    if (part.empty()) continue;
    if (part == std::to_string(c.id) || c.name.find(part) != std::string::npos) return true;
  }
  return false;
}

/// Runs the selected criteria, printing one row each as it completes.
/// An edsim::Error inside a criterion fails that row and names the error.
inline std::vector<Result> run(const Options& opts, std::ostream& out) {
  detail::Suite suite(opts);
  std::vector<Result> results;
  for (const auto& c : criteria()) {
    if (!selected(c, opts.filter)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = (suite.*c.run)();
    } catch (const Error& e) {
      r = {c.id, c.name, false, std::string(to_string(e.kind())) + ": " + e.what()};
    }
    if (r.seconds == 0.0) r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char head[96];
    std::snprintf(head, sizeof head, "[%s] %2d %-20s (%6.1f s) ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                  r.seconds);
    out << head << r.detail << std::endl;
    results.push_back(std::move(r));
  }
  return results;
}

inline nlohmann::json to_json(const std::vector<Result>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
  }
  return arr;
}

/// Runs the suite, prints the table and a summary line, and writes
/// acceptance.json into `out_dir` when one is given.
inline int cmd_validate(const Options& opts, std::ostream& out, const std::string& out_dir = {}) {
  const auto results = run(opts, out);
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.pass;
  out << passed << "/" << results.size() << " criteria passed" << std::endl;
  if (!out_dir.empty()) {
    io::write_atomic(std::filesystem::path(out_dir) / "acceptance.json", to_json(results).dump(2) + '\n');
  }
  if (results.empty()) throw ConfigError("filter '" + opts.filter + "' matches no criterion", "filter");
  return passed == results.size() ? kExitOk : kExitValidationFailed;
}

}  // namespace edsim::acceptance

#endif  // EDSIM_ACCEPTANCE_HPP
