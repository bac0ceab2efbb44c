#ifndef EDSIM_CONFIG_HPP
#define EDSIM_CONFIG_HPP

// Run configuration. The file is INI: `[section]` headers and `key = value`
// lines, `;` or `#` comments. The schema below is the full list of accepted
// keys; anything else is rejected.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "edsim/dynamics.hpp"
#include "edsim/error.hpp"
#include "edsim/grid.hpp"
#include "edsim/io.hpp"
#include "edsim/random.hpp"
#include "edsim/state.hpp"
#include "edsim/trajectories.hpp"

namespace edsim {

inline constexpr const char* kOutDirEnv = "EDSIM_OUT_DIR";

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  struct {
    double x_min = -20.0;
    double x_max = 20.0;
    std::size_t n = 1024;
    Boundary boundary = Boundary::HardWall;
  } grid;

  struct {
    double hbar = 1.0;
    double mass = 1.0;
    std::string potential = "free";  // free | harmonic
    double omega = 1.0;
    double center = 0.0;
  } physics;

  struct {
    std::string preset = "gaussian";  // gaussian | plane_wave | eigenstate
    double mu = 0.0;
    double sigma = 1.0;
    double k = 1.0;
    std::string well = "harmonic";
    unsigned level = 0;
  } state;

  struct {
    std::string engine = "schrodinger";  // schrodinger | madelung | both
    double dt = 1e-3;
    double t_final = 1.0;
    std::size_t snapshot_stride = 10;
    double c_stab = 0.1;
    double node_floor = 1e-12;
  } evolution;

  struct {
    std::string mode = "both";  // current_flow | entropic_diffusion | both
    std::size_t particles = 100000;
    double dt = 0.0;            // 0: use evolution.dt
    std::string trace;          // stored trace NDJSON; empty: evolve afresh
    std::size_t record_stride = 0;  // 0: record initial and final ensembles only
  } sampler;

  struct {
    std::string device = "fourier";  // fourier | position | file
    std::size_t dim = 16;
    std::string device_file;
    std::string state = "random";  // random | eigenvector | superposition
    std::size_t eigen_index = 0;
    std::vector<std::size_t> components;  // superposition members; empty: all
    std::size_t trials = 100000;
    std::string sampler = "categorical";  // categorical | trajectory
  } measurement;

  struct {
    std::string likelihood = "ideal";  // ideal | noisy | file
    double epsilon = 0.1;
    std::string likelihood_file;
    std::string prior = "born";  // born | uniform | comma-separated probabilities
    std::size_t trials = 100000;
  } amplification;

  PhysicalParams physical_params() const {
    if (physics.potential == "harmonic") {
      return PhysicalParams::harmonic(physics.omega, physics.center, physics.hbar, physics.mass);
    }
    return PhysicalParams::free(physics.hbar, physics.mass);
  }

  Grid1D make_grid() const { return Grid1D(grid.x_min, grid.x_max, grid.n); }

  WaveFunction initial_state() const {
    const Grid1D g = make_grid();
    if (state.preset == "plane_wave") return plane_wave(g, state.k);
    if (state.preset == "eigenstate") {
      return harmonic_eigenstate(g, physical_params(), physics.omega, physics.center, state.level);
    }
    return gaussian_packet(g, state.mu, state.sigma, state.k);
  }

  EvolutionConfig evolution_config(Engine engine) const {
    EvolutionConfig c;
    c.dt = evolution.dt;
    c.t_final = evolution.t_final;
    c.engine = engine;
    c.snapshot_stride = evolution.snapshot_stride;
    c.boundary = grid.boundary;
    c.c_stab = evolution.c_stab;
    c.node_floor = evolution.node_floor;
    return c;
  }

  /// Independent seed for a named subsystem.
  std::uint64_t stream_seed(std::string_view subsystem) const { return derive_seed(seed, subsystem); }
};

namespace config_detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ConfigError("'" + key + "': cannot parse '" + text + "' as a number", key);
  }
  return v;
}

inline std::string choice(const std::string& key, const std::string& text,
                          std::initializer_list<std::string_view> allowed) {
  for (auto a : allowed) {
    if (text == a) return text;
  }
  std::string list;
  for (auto a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
  throw ConfigError("'" + key + "': expected one of " + list + ", got '" + text + "'", key);
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string& name, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline std::string num(double v) { return io::format_double(v); }

template <typename T>
std::string num_u(T v) { return std::to_string(v); }

#define EDSIM_FIELD_DOUBLE(sec, name, member)                                                   \
  Field{sec, name, [](RunConfig& c, const std::string& k, const std::string& v) {               \
          c.member = parse_number<double>(k, v);                                                \
        },                                                                                      \
        [](const RunConfig& c) { return num(c.member); }}
#define EDSIM_FIELD_UINT(sec, name, member, type)                                               \
  Field{sec, name, [](RunConfig& c, const std::string& k, const std::string& v) {               \
          c.member = parse_number<type>(k, v);                                                  \
        },                                                                                      \
        [](const RunConfig& c) { return num_u(c.member); }}
#define EDSIM_FIELD_CHOICE(sec, name, member, ...)                                              \
  Field{sec, name, [](RunConfig& c, const std::string& k, const std::string& v) {               \
          c.member = choice(k, v, {__VA_ARGS__});                                               \
        },                                                                                      \
        [](const RunConfig& c) { return c.member; }}
#define EDSIM_FIELD_STRING(sec, name, member)                                                   \
  Field{sec, name, [](RunConfig& c, const std::string&, const std::string& v) { c.member = v; }, \
        [](const RunConfig& c) { return c.member; }}

inline const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      EDSIM_FIELD_UINT("run", "seed", seed, std::uint64_t),
      EDSIM_FIELD_STRING("output", "dir", output_dir),

      EDSIM_FIELD_DOUBLE("grid", "x_min", grid.x_min),
      EDSIM_FIELD_DOUBLE("grid", "x_max", grid.x_max),
      EDSIM_FIELD_UINT("grid", "n", grid.n, std::size_t),
      Field{"grid", "boundary",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.grid.boundary = choice(k, v, {"periodic", "hard_wall"}) == "periodic" ? Boundary::Periodic
                                                                                      : Boundary::HardWall;
            },
            [](const RunConfig& c) {
              return std::string(c.grid.boundary == Boundary::Periodic ? "periodic" : "hard_wall");
            }},

      EDSIM_FIELD_DOUBLE("physics", "hbar", physics.hbar),
      EDSIM_FIELD_DOUBLE("physics", "mass", physics.mass),
      EDSIM_FIELD_CHOICE("physics", "potential", physics.potential, "free", "harmonic"),
      EDSIM_FIELD_DOUBLE("physics", "omega", physics.omega),
      EDSIM_FIELD_DOUBLE("physics", "center", physics.center),

      EDSIM_FIELD_CHOICE("state", "preset", state.preset, "gaussian", "plane_wave", "eigenstate"),
      EDSIM_FIELD_DOUBLE("state", "mu", state.mu),
      EDSIM_FIELD_DOUBLE("state", "sigma", state.sigma),
      EDSIM_FIELD_DOUBLE("state", "k", state.k),
      EDSIM_FIELD_CHOICE("state", "well", state.well, "harmonic"),
      EDSIM_FIELD_UINT("state", "level", state.level, unsigned),

      EDSIM_FIELD_CHOICE("evolution", "engine", evolution.engine, "schrodinger", "madelung", "both"),
      EDSIM_FIELD_DOUBLE("evolution", "dt", evolution.dt),
      EDSIM_FIELD_DOUBLE("evolution", "t_final", evolution.t_final),
      EDSIM_FIELD_UINT("evolution", "snapshot_stride", evolution.snapshot_stride, std::size_t),
      EDSIM_FIELD_DOUBLE("evolution", "c_stab", evolution.c_stab),
      EDSIM_FIELD_DOUBLE("evolution", "node_floor", evolution.node_floor),

      EDSIM_FIELD_CHOICE("sampler", "mode", sampler.mode, "current_flow", "entropic_diffusion", "both"),
      EDSIM_FIELD_UINT("sampler", "particles", sampler.particles, std::size_t),
      EDSIM_FIELD_DOUBLE("sampler", "dt", sampler.dt),
      EDSIM_FIELD_STRING("sampler", "trace", sampler.trace),
      EDSIM_FIELD_UINT("sampler", "record_stride", sampler.record_stride, std::size_t),

      EDSIM_FIELD_CHOICE("measurement", "device", measurement.device, "fourier", "position", "file"),
      EDSIM_FIELD_UINT("measurement", "dim", measurement.dim, std::size_t),
      EDSIM_FIELD_STRING("measurement", "device_file", measurement.device_file),
      EDSIM_FIELD_CHOICE("measurement", "state", measurement.state, "random", "eigenvector", "superposition"),
      EDSIM_FIELD_UINT("measurement", "eigen_index", measurement.eigen_index, std::size_t),
      Field{"measurement", "components",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.measurement.components.clear();
              if (trim(v).empty()) return;
              for (const auto& f : io::split(v, ',')) {
                c.measurement.components.push_back(parse_number<std::size_t>(k, f));
              }
            },
            [](const RunConfig& c) {
              std::string s;
              for (auto i : c.measurement.components) s += (s.empty() ? "" : ",") + std::to_string(i);
              return s;
            }},
      EDSIM_FIELD_UINT("measurement", "trials", measurement.trials, std::size_t),
      EDSIM_FIELD_CHOICE("measurement", "sampler", measurement.sampler, "categorical", "trajectory"),

      EDSIM_FIELD_CHOICE("amplification", "likelihood", amplification.likelihood, "ideal", "noisy", "file"),
      EDSIM_FIELD_DOUBLE("amplification", "epsilon", amplification.epsilon),
      EDSIM_FIELD_STRING("amplification", "likelihood_file", amplification.likelihood_file),
      EDSIM_FIELD_STRING("amplification", "prior", amplification.prior),
      EDSIM_FIELD_UINT("amplification", "trials", amplification.trials, std::size_t),
  };
  return fields;
}

#undef EDSIM_FIELD_DOUBLE
#undef EDSIM_FIELD_UINT
#undef EDSIM_FIELD_CHOICE
#undef EDSIM_FIELD_STRING

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("'" + key + "': " + what, key);
}

}  // namespace config_detail

/// Module preconditions that can be checked without running anything.
inline void validate(const RunConfig& c) {
  using config_detail::require;
  require(std::isfinite(c.grid.x_min) && std::isfinite(c.grid.x_max), "grid.x_min", "must be finite");
  require(c.grid.x_max > c.grid.x_min, "grid.x_max", "must exceed grid.x_min");
  require(c.grid.n >= 8, "grid.n", "must be >= 8");
  require(c.physics.hbar > 0 && std::isfinite(c.physics.hbar), "physics.hbar", "must be > 0");
  require(c.physics.mass > 0 && std::isfinite(c.physics.mass), "physics.mass", "must be > 0");
  require(c.physics.omega > 0 && std::isfinite(c.physics.omega), "physics.omega", "must be > 0");
  require(std::isfinite(c.physics.center), "physics.center", "must be finite");
  require(c.state.sigma > 0 && std::isfinite(c.state.sigma), "state.sigma", "must be > 0");
  require(std::isfinite(c.state.mu), "state.mu", "must be finite");
  require(std::isfinite(c.state.k), "state.k", "must be finite");
  require(c.evolution.dt > 0 && std::isfinite(c.evolution.dt), "evolution.dt", "must be > 0");
  require(c.evolution.t_final >= 0 && std::isfinite(c.evolution.t_final), "evolution.t_final", "must be >= 0");
  require(c.evolution.snapshot_stride >= 1, "evolution.snapshot_stride", "must be >= 1");
  require(c.evolution.c_stab > 0, "evolution.c_stab", "must be > 0");
  require(c.evolution.node_floor > 0 && c.evolution.node_floor < 1, "evolution.node_floor", "must lie in (0, 1)");
  require(c.sampler.particles >= 1, "sampler.particles", "must be >= 1");
  require(c.sampler.dt >= 0 && std::isfinite(c.sampler.dt), "sampler.dt", "must be >= 0");
  require(c.measurement.dim >= 1, "measurement.dim", "must be >= 1");
  require(c.measurement.trials >= 1, "measurement.trials", "must be >= 1");
  require(c.measurement.device != "file" || !c.measurement.device_file.empty(), "measurement.device_file",
          "required when device = file");
  require(c.amplification.epsilon >= 0 && c.amplification.epsilon < 1, "amplification.epsilon",
          "must lie in [0, 1)");
  require(c.amplification.trials >= 1, "amplification.trials", "must be >= 1");
  require(c.amplification.likelihood != "file" || !c.amplification.likelihood_file.empty(),
          "amplification.likelihood_file", "required when likelihood = file");
}

/// Applies `section.key = value` pairs from INI text on top of `base`.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  const auto& fields = config_detail::schema();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("'" + section + "': keys must live inside a [section]", section);
    }
    if (std::none_of(fields.begin(), fields.end(), [&](const auto& f) { return f.section == section; })) {
      throw ConfigError("unknown config section '" + section + "'", section);
    }
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const auto it = std::find_if(fields.begin(), fields.end(),
                                   [&](const auto& f) { return f.section == section && f.key == key; });
      if (it == fields.end()) throw ConfigError("unknown config key '" + name + "'", name);
      it->set(base, name, config_detail::trim(value.data()));
    }
  }
  validate(base);
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError&) {
    throw IoError("cannot read config file " + path.string());
  }
  return parse_config(text);
}

/// Output directory precedence: explicit flag, then environment, then file.
inline void apply_overrides(RunConfig& c, const std::optional<std::string>& out_dir,
                            const std::optional<std::uint64_t>& seed) {
  if (const char* env = std::getenv(kOutDirEnv); env && *env) c.output_dir = env;
  if (out_dir) c.output_dir = *out_dir;
  if (seed) c.seed = *seed;
}

/// Fully resolved configuration, every key written, in schema order.
inline std::string to_ini(const RunConfig& c) {
  std::string out;
  std::string current;
  for (const auto& f : config_detail::schema()) {
    if (f.section != current) {
      out += (current.empty() ? "[" : "\n[") + f.section + "]\n";
      current = f.section;
    }
    out += f.key + " = " + f.get(c) + '\n';
  }
  return out;
}

}  // namespace edsim

#endif  // EDSIM_CONFIG_HPP
