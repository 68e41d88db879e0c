#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmlp {

// Every library failure derives from Error so callers (the CLI in particular)
// can map a failure category onto an exit code.
enum class ErrorKind {
  InvalidEdge,
  SelfLoopRejected,
  DimensionError,
  SplitOverlap,
  FactorizationError,
  MissingGraph,
  EmptyMask,
  UnknownModel,
  MissingLabels,
  Unsupported,
  NumericalOverflow,
  DegenerateFeature,
  SchemaError,
  LabelError,
  StratificationError,
  ParseError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidEdge: return "InvalidEdge";
    case ErrorKind::SelfLoopRejected: return "SelfLoopRejected";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::SplitOverlap: return "SplitOverlap";
    case ErrorKind::FactorizationError: return "FactorizationError";
    case ErrorKind::MissingGraph: return "MissingGraph";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::NumericalOverflow: return "NumericalOverflow";
    case ErrorKind::DegenerateFeature: return "DegenerateFeature";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::LabelError: return "LabelError";
    case ErrorKind::StratificationError: return "StratificationError";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Cholesky breakdown; pivot() is the first row whose pivot was not positive.
class FactorizationError : public Error {
 public:
  FactorizationError(std::size_t pivot, double value)
      : Error(ErrorKind::FactorizationError,
              "non-positive pivot " + std::to_string(value) + " at row " + std::to_string(pivot)),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// Non-finite prediction during an extrapolation probe.
class NumericalOverflow : public Error {
 public:
  explicit NumericalOverflow(double t)
      : Error(ErrorKind::NumericalOverflow, "non-finite prediction at t=" + std::to_string(t)), t_(t) {}

  double t() const noexcept { return t_; }

 private:
  double t_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace pmlp
