#ifndef EDSIM_ERROR_HPP
#define EDSIM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace edsim {

enum class ErrorKind {
  Config,
  Io,
  Node,
  Solver,
  Stability,
  TraceCoverage,
  Basis,
  Cell,
  Monotonicity,
  Range,
  ZeroEvidence,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Node: return "NodeError";
    case ErrorKind::Solver: return "SolverError";
    case ErrorKind::Stability: return "StabilityError";
    case ErrorKind::TraceCoverage: return "TraceCoverageError";
    case ErrorKind::Basis: return "BasisError";
    case ErrorKind::Cell: return "CellError";
    case ErrorKind::Monotonicity: return "MonotonicityError";
    case ErrorKind::Range: return "RangeError";
    case ErrorKind::ZeroEvidence: return "ZeroEvidenceError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindedError : public Error {
 public:
  explicit KindedError(const std::string& what) : Error(K, what) {}
};

/// Configuration problems carry the offending `section.key` when there is one.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : Error(ErrorKind::Config, what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

using IoError = KindedError<ErrorKind::Io>;
using NodeError = KindedError<ErrorKind::Node>;
using SolverError = KindedError<ErrorKind::Solver>;
using StabilityError = KindedError<ErrorKind::Stability>;
using TraceCoverageError = KindedError<ErrorKind::TraceCoverage>;
using BasisError = KindedError<ErrorKind::Basis>;
using CellError = KindedError<ErrorKind::Cell>;
using MonotonicityError = KindedError<ErrorKind::Monotonicity>;
using RangeError = KindedError<ErrorKind::Range>;
using ZeroEvidenceError = KindedError<ErrorKind::ZeroEvidence>;

/// Rethrows as the concrete subclass for `kind` so callers can still catch by type.
[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::Config: throw ConfigError(what);
    case ErrorKind::Io: throw IoError(what);
    case ErrorKind::Node: throw NodeError(what);
    case ErrorKind::Solver: throw SolverError(what);
    case ErrorKind::Stability: throw StabilityError(what);
    case ErrorKind::TraceCoverage: throw TraceCoverageError(what);
    case ErrorKind::Basis: throw BasisError(what);
    case ErrorKind::Cell: throw CellError(what);
    case ErrorKind::Monotonicity: throw MonotonicityError(what);
    case ErrorKind::Range: throw RangeError(what);
    case ErrorKind::ZeroEvidence: throw ZeroEvidenceError(what);
  }
  throw Error(kind, what);
}

}  // namespace edsim

#endif  // EDSIM_ERROR_HPP
