#ifndef EDSIM_COMMANDS_HPP
#define EDSIM_COMMANDS_HPP

// Batch pipelines behind the CLI subcommands. Each writes its artifacts plus
// the resolved config into the output directory and throws edsim::Error on
// failure; run_command turns that into an exit status and an error record.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "edsim/amplification.hpp"
#include "edsim/config.hpp"
#include "edsim/dynamics.hpp"
#include "edsim/error.hpp"
#include "edsim/io.hpp"
#include "edsim/measurement.hpp"
#include "edsim/random.hpp"
#include "edsim/stats.hpp"
#include "edsim/trajectories.hpp"

namespace edsim {

namespace fs = std::filesystem;

/// Process exit statuses.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNode = 4,
  kExitSolver = 5,
  kExitStability = 6,
  kExitTraceCoverage = 7,
  kExitBasis = 8,
  kExitCell = 9,
  kExitMonotonicity = 10,
  kExitRange = 11,
  kExitZeroEvidence = 12,
  kExitValidationFailed = 20,
};

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::Node: return kExitNode;
    case ErrorKind::Solver: return kExitSolver;
    case ErrorKind::Stability: return kExitStability;
    case ErrorKind::TraceCoverage: return kExitTraceCoverage;
    case ErrorKind::Basis: return kExitBasis;
    case ErrorKind::Cell: return kExitCell;
    case ErrorKind::Monotonicity: return kExitMonotonicity;
    case ErrorKind::Range: return kExitRange;
    case ErrorKind::ZeroEvidence: return kExitZeroEvidence;
  }
  return kExitInternal;
}

inline nlohmann::json error_record(const std::exception& e, int code) {
  nlohmann::json rec{{"exit_code", code}, {"message", e.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    rec["error"] = std::string(to_string(err->kind()));
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e); ce && !ce->key().empty()) rec["key"] = ce->key();
  } else {
    rec["error"] = "InternalError";
  }
  return rec;
}

/// Runs `body`, mapping exceptions to exit codes and writing a one-line JSON
/// error record to `err`.
inline int run_command(const std::function<int()>& body, std::ostream& err = std::cerr) {
  try {
    return body();
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    err << error_record(e, code).dump() << '\n';
    return code;
  } catch (const std::exception& e) {
    err << error_record(e, kExitInternal).dump() << '\n';
    return kExitInternal;
  }
}

namespace commands_detail {

inline fs::path out_path(const RunConfig& c, const std::string& name) { return fs::path(c.output_dir) / name; }

inline void write_json(const RunConfig& c, const std::string& name, const nlohmann::json& j) {
  io::write_atomic(out_path(c, name), j.dump(2) + '\n');
}

inline void write_resolved_config(const RunConfig& c) { io::write_atomic(out_path(c, "config.ini"), to_ini(c)); }

inline std::vector<Engine> engines(const RunConfig& c) {
  if (c.evolution.engine == "both") return {Engine::Schrodinger, Engine::Madelung};
  return {c.evolution.engine == "madelung" ? Engine::Madelung : Engine::Schrodinger};
}

}  // namespace commands_detail

// ---------------------------------------------------------------------------

inline int cmd_evolve(const RunConfig& c) {
  using namespace commands_detail;
  validate(c);
  const auto p = c.physical_params();
  const auto psi = c.initial_state();
  std::vector<EvolutionTrace> traces;
  for (Engine e : engines(c)) {
    traces.push_back(evolve(psi, p, c.evolution_config(e)));
    const std::string tag(to_string(e));
    io::write_atomic(out_path(c, "trace_" + tag + ".ndjson"), io::trace_ndjson(traces.back()));
    io::write_atomic(out_path(c, "diagnostics_" + tag + ".csv"), io::diagnostics_csv(traces.back()));
  }
  if (traces.size() == 2) {
    const auto& a = traces[0].snapshots;
    const auto& b = traces[1].snapshots;
    const double dx = a.front().grid().dx();
    std::string csv = "t,l1_rho\n";
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
      csv += io::format_double(a[k].t) + ',' + io::format_double(l1_distance(a[k].density(), b[k].density(), dx)) + '\n';
    }
    io::write_atomic(out_path(c, "comparison.csv"), csv);
  }
  write_resolved_config(c);
  return kExitOk;
}

inline std::vector<SamplerMode> sampler_modes(const RunConfig& c) {
  if (c.sampler.mode == "both") return {SamplerMode::CurrentFlow, SamplerMode::EntropicDiffusion};
  return {c.sampler.mode == "current_flow" ? SamplerMode::CurrentFlow : SamplerMode::EntropicDiffusion};
}

inline int cmd_trajectories(const RunConfig& c) {
  using namespace commands_detail;
  validate(c);
  const auto p = c.physical_params();
  EvolutionTrace trace = c.sampler.trace.empty()
                             ? evolve(c.initial_state(), p, c.evolution_config(engines(c).front()))
                             : io::read_trace_ndjson(c.sampler.trace, c.grid.boundary, c.evolution.node_floor);
  const FlowFields fields(trace, p);
  const Grid1D& grid = fields.grid();

  const double span = trace.t_end() - trace.t_begin();
  const double dt_req = c.sampler.dt > 0 ? c.sampler.dt : c.evolution.dt;
  const auto steps = static_cast<std::size_t>(std::ceil(span / dt_req - 1e-9));
  const double dt = steps ? span / static_cast<double>(steps) : dt_req;

  const auto& first = trace.snapshots.front();
  const Ensemble start =
      sample_initial(first.density(), first.grid(), c.sampler.particles, c.stream_seed("trajectories"), first.t);
  const stats::CellCdf final_cdf(grid, trace.snapshots.back().density());

  nlohmann::json tests = nlohmann::json::array();
  std::vector<std::vector<double>> finals;
  for (SamplerMode mode : sampler_modes(c)) {
    std::string csv = io::ensemble_csv_header();
    io::append_ensemble_rows(csv, start);
    Ensemble ens = start;
    const std::size_t chunk = c.sampler.record_stride ? c.sampler.record_stride : std::max<std::size_t>(steps, 1);
    for (std::size_t done = 0; done < steps;) {
      const std::size_t n = std::min(chunk, steps - done);
      ens = advance_ensemble(ens, fields, dt, mode, n);
      done += n;
      // Pin the clock to the grid of steps so output does not depend on chunking.
      ens.t = trace.t_begin() + static_cast<double>(done) * dt;
      io::append_ensemble_rows(csv, ens);
    }
    const std::string tag(to_string(mode));
    io::write_atomic(out_path(c, "ensemble_" + tag + ".csv"), csv);
    tests.push_back(io::to_json(stats::ks_test("ks_" + tag, ens.positions, final_cdf)));
    finals.push_back(std::move(ens.positions));
  }
  if (finals.size() == 2) {
    tests.push_back(io::to_json(stats::ks_test_two_sample("ks_two_sample_modes", finals[0], finals[1])));
  }
  write_json(c, "ks.json", tests);
  write_resolved_config(c);
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline DiscreteDevice make_device(const RunConfig& c) {
  if (c.measurement.device == "file") return io::read_device(c.measurement.device_file);
  if (c.measurement.device == "position") return position_device(c.measurement.dim);
  return fourier_device(c.measurement.dim);
}

/// The prepared state in the device's N-dimensional space.
inline ComplexVector measurement_state(const RunConfig& c, const DiscreteDevice& dev) {
  const auto n = static_cast<Eigen::Index>(dev.dim);
  ComplexVector psi = ComplexVector::Zero(n);
  if (c.measurement.state == "random") {
    for (Eigen::Index j = 0; j < n; ++j) {
      auto rng = stream(c.seed, "measurement_state", static_cast<std::uint64_t>(j));
      std::normal_distribution<double> normal;
      const double re = normal(rng);
      const double im = normal(rng);
      psi[j] = {re, im};
    }
  } else if (c.measurement.state == "eigenvector") {
    if (c.measurement.eigen_index >= dev.dim) {
      throw ConfigError("'measurement.eigen_index' exceeds device dimension", "measurement.eigen_index");
    }
    psi = dev.basis.col(static_cast<Eigen::Index>(c.measurement.eigen_index));
  } else {
    std::vector<std::size_t> members = c.measurement.components;
    if (members.empty()) {
      for (std::size_t i = 0; i < dev.dim; ++i) members.push_back(i);
    }
    for (auto i : members) {
      if (i >= dev.dim) {
        throw ConfigError("'measurement.components' index exceeds device dimension", "measurement.components");
      }
      psi += dev.basis.col(static_cast<Eigen::Index>(i));
    }
  }
  const double norm = psi.norm();
  if (!(norm > 0.0)) throw RangeError("measurement state has zero norm");
  return psi / norm;
}

inline nlohmann::json state_json(const ComplexVector& psi) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index j = 0; j < psi.size(); ++j) arr.push_back(io::complex_pair(psi[j]));
  return arr;
}

inline int cmd_measure(const RunConfig& c) {
  using namespace commands_detail;
  validate(c);
  const DiscreteDevice dev = make_device(c);
  const ComplexVector psi = measurement_state(c, dev);
  const auto born = born_probabilities(dev, psi);
  const auto sampler = c.measurement.sampler == "trajectory" ? OutcomeSampler::Trajectory : OutcomeSampler::Categorical;
  const auto records = simulate_measurement(dev, psi, c.measurement.trials, c.stream_seed("measurement"), sampler);
  const auto counts = tally(records, dev.dim);

  io::write_atomic(out_path(c, "outcomes.csv"), io::outcomes_csv(records));
  write_json(c, "chi2.json", io::to_json(stats::chi_square_test("born_chi2", counts, born)));
  write_json(c, "born.json", {{"born", born}, {"counts", counts}, {"state", state_json(psi)}});
  write_json(c, "device.json", io::device_json(dev));
  write_resolved_config(c);
  return kExitOk;
}

inline LikelihoodModel make_likelihood(const RunConfig& c, std::size_t n) {
  if (c.amplification.likelihood == "file") return io::read_likelihood_csv(c.amplification.likelihood_file);
  if (c.amplification.likelihood == "noisy") return noisy_likelihood(n, c.amplification.epsilon);
  return ideal_likelihood(n);
}

inline std::optional<std::vector<double>> make_prior(const RunConfig& c, std::size_t n) {
  const std::string& text = c.amplification.prior;
  const std::string key = "amplification.prior";
  if (text == "born") return std::nullopt;
  if (text == "uniform") return std::vector<double>(n, 1.0 / static_cast<double>(n));
  std::vector<double> prior;
  for (const auto& f : io::split(text, ',')) prior.push_back(config_detail::parse_number<double>(key, f));
  if (prior.size() != n) throw ConfigError("'" + key + "' must list one probability per device cell", key);
  double sum = 0.0;
  for (double v : prior) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("'" + key + "' entries must lie in [0, 1]", key);
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("'" + key + "' must sum to 1", key);
  return prior;
}

inline int cmd_amplify(const RunConfig& c) {
  using namespace commands_detail;
  validate(c);
  const DiscreteDevice dev = make_device(c);
  const ComplexVector psi = measurement_state(c, dev);
  const LikelihoodModel L = make_likelihood(c, dev.dim);
  const auto log = end_to_end(psi, dev, L, c.amplification.trials, c.stream_seed("amplification"), make_prior(c, dev.dim));

  io::write_atomic(out_path(c, "experiment.ndjson"), io::experiment_ndjson(log));
  write_json(c, "summary.json",
             {{"trials", log.trials.size()},
              {"map_error_rate", log.map_error_rate},
              {"born", log.born},
              {"prior", log.prior},
              {"pointer_fit", io::to_json(log.pointer_fit)}});
  io::write_atomic(out_path(c, "likelihood.csv"), io::likelihood_csv(L));
  write_resolved_config(c);
  return kExitOk;
}

}  // namespace edsim

#endif  // EDSIM_COMMANDS_HPP
