#ifndef EDSIM_IO_HPP
#define EDSIM_IO_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "edsim/amplification.hpp"
#include "edsim/dynamics.hpp"
#include "edsim/error.hpp"
#include "edsim/measurement.hpp"
#include "edsim/stats.hpp"
#include "edsim/trajectories.hpp"

namespace edsim::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Shortest text that round-trips.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw IoError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

/// Writes to a sibling temp file and renames it into place.
inline void write_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Evolution traces: one {t, x, rho, phi} object per line.

inline std::string trace_ndjson(const EvolutionTrace& trace) {
  std::string out;
  for (const auto& s : trace.snapshots) {
    const auto& g = s.grid();
    json rec;
    rec["t"] = s.t;
    rec["x"] = g.centers();
    rec["rho"] = s.density();
    rec["phi"] = s.phase();
    out += rec.dump();
    out += '\n';
  }
  return out;
}

/// Rebuilds a trace of hydrodynamic snapshots. The grid is recovered from
/// the cell centres; boundary and node floor are not part of the format.
inline EvolutionTrace read_trace_ndjson(const fs::path& path, Boundary bc, double node_floor) {
  std::istringstream in(read_file(path));
  EvolutionTrace trace;
  trace.engine = Engine::Schrodinger;
  trace.boundary = bc;
  trace.node_floor = node_floor;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json rec = parse_json(line, path.string() + ":" + std::to_string(lineno));
    try {
      const auto x = rec.at("x").get<std::vector<double>>();
      if (x.size() < 8) throw IoError("trace grid has fewer than 8 cells");
      const double dx = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
      const Grid1D g(x.front() - dx / 2, x.back() + dx / 2, x.size());
      trace.snapshots.push_back(
          {rec.at("t").get<double>(),
           HydroState(g, rec.at("rho").get<std::vector<double>>(), rec.at("phi").get<std::vector<double>>())});
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const RangeError& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (trace.snapshots.empty()) throw IoError("trace file has no snapshots: " + path.string());
  return trace;
}

inline std::string diagnostics_csv(const EvolutionTrace& trace) {
  std::string out = "t,norm,energy,renorm_correction\n";
  for (const auto& d : trace.diagnostics) {
    out += format_double(d.t) + ',' + format_double(d.norm) + ',' + format_double(d.energy) + ',' +
           format_double(d.renorm_correction) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles and statistical test records.

inline std::string ensemble_csv_header() { return "particle_id,t,x\n"; }

inline void append_ensemble_rows(std::string& out, const Ensemble& ens) {
  const std::string t = format_double(ens.t);
  for (std::size_t p = 0; p < ens.positions.size(); ++p) {
    out += std::to_string(p) + ',' + t + ',' + format_double(ens.positions[p]) + '\n';
  }
}

inline json to_json(const stats::TestResult& r) {
  json j{{"test", r.test},
         {"statistic", r.statistic},
         {"critical_value", r.critical_value},
         {"n", r.n},
         {"pass", r.pass}};
  if (r.p_value >= 0.0) j["p_value"] = r.p_value;
  return j;
}

// ---------------------------------------------------------------------------
// Devices: {dim, basis: [[ [re, im], ... ] per vector], target_cells, eigenvalues}.

inline json complex_pair(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw IoError("complex value must be a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json device_json(const DiscreteDevice& dev) {
  json basis = json::array();
  for (Eigen::Index i = 0; i < dev.basis.cols(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < dev.basis.rows(); ++j) row.push_back(complex_pair(dev.basis(j, i)));
    basis.push_back(std::move(row));
  }
  json ev = json::array();
  for (Eigen::Index i = 0; i < dev.eigenvalues.size(); ++i) ev.push_back(complex_pair(dev.eigenvalues[i]));
  return {{"dim", dev.dim}, {"basis", basis}, {"target_cells", dev.target_cells}, {"eigenvalues", ev}};
}

/// Parses and validates; BasisError / CellError propagate from build_device.
inline DiscreteDevice device_from_json(const json& j) {
  try {
    const auto n = j.at("dim").get<std::size_t>();
    const auto& basis = j.at("basis");
    if (n == 0 || basis.size() != n) throw BasisError("device file: basis must hold dim vectors");
    ComplexMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (basis[i].size() != n) throw BasisError("device file: basis vector " + std::to_string(i) + " has wrong length");
      for (std::size_t k = 0; k < n; ++k) {
        a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = complex_from(basis[i][k]);
      }
    }
    const auto& evj = j.at("eigenvalues");
    ComplexVector ev(static_cast<Eigen::Index>(evj.size()));
    for (std::size_t i = 0; i < evj.size(); ++i) ev[static_cast<Eigen::Index>(i)] = complex_from(evj[i]);
    const auto cells = j.at("target_cells").get<std::vector<std::size_t>>();
    return build_device(std::move(a), cells, std::move(ev));
  } catch (const json::exception& e) {
    throw IoError(std::string("device file: ") + e.what());
  }
}

inline DiscreteDevice read_device(const fs::path& path) {
  return device_from_json(parse_json(read_file(path), path.string()));
}

inline std::string outcomes_csv(const std::vector<OutcomeRecord>& records) {
  std::string out = "trial,index,eigenvalue_re,eigenvalue_im,cell\n";
  for (const auto& r : records) {
    out += std::to_string(r.trial) + ',' + std::to_string(r.index) + ',' + format_double(r.eigenvalue.real()) +
           ',' + format_double(r.eigenvalue.imag()) + ',' + std::to_string(r.cell) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Likelihood matrices: header row of pointer labels, then one row per cell i
// holding P(alpha_r | x_i) for each pointer value r.

inline std::string likelihood_csv(const LikelihoodModel& L) {
  std::string out;
  for (std::size_t r = 0; r < L.pointer_values(); ++r) out += (r ? ",r" : "r") + std::to_string(r);
  out += '\n';
  for (std::size_t i = 0; i < L.cells(); ++i) {
    for (std::size_t r = 0; r < L.pointer_values(); ++r) {
      if (r) out += ',';
      out += format_double(L(r, i));
    }
    out += '\n';
  }
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    std::string field(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline LikelihoodModel read_likelihood_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError("likelihood file is empty: " + path.string());
  const std::size_t R = split(line, ',').size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split(line, ',');
    if (fields.size() != R) {
      throw IoError("likelihood row " + std::to_string(rows.size() + 1) + " has " + std::to_string(fields.size()) +
                    " fields, header has " + std::to_string(R));
    }
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_double(f));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("likelihood file has no rows: " + path.string());
  LikelihoodModel L{Eigen::MatrixXd(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t r = 0; r < R; ++r) L.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = rows[i][r];
  }
  L.validate();
  return L;
}

inline std::string experiment_ndjson(const ExperimentLog& log) {
  std::string out;
  for (const auto& t : log.trials) {
    out += json{{"trial", t.trial},
                {"true_i", t.true_i},
                {"observed_r", t.observed_r},
                {"posterior", t.posterior},
                {"map_i", t.map_i}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace edsim::io

#endif  // EDSIM_IO_HPP
