#pragma once

#include <stdexcept>
#include <string>

namespace psrec {

// Base class for every error thrown by this library. The CLI maps error
// families to process exit codes, so catch sites can rely on the hierarchy:
//   ConvergenceError        -> exit 3
//   any other psrec::Error  -> exit 2
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (CSV rows, config lines, scene specs). Messages carry
// the 1-based line number where parsing stopped.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A coordinate or index that falls outside the governing extent.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// A value outside its mathematical domain (negative energy, even window,
// non-positive rate, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Vector/matrix size mismatch between two objects that must agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Training input that cannot produce a model (empty class, too few samples).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Optimizer ran out of its sweep budget. Carries how far it got so callers
// can report diagnostics instead of a bare failure.
class ConvergenceError : public TrainingError {
 public:
  ConvergenceError(const std::string& message, int sweeps, int open_violations)
      : TrainingError(message), sweeps_(sweeps), open_violations_(open_violations) {}

  int sweeps() const { return sweeps_; }
  int open_violations() const { return open_violations_; }

 private:
  int sweeps_ = 0;
  int open_violations_ = 0;
};

// Model (de)serialization failures, split so tests and tools can tell a stale
// file from a damaged one.
class ModelIoError : public Error {
 public:
  using Error::Error;
};

class VersionError : public ModelIoError {
 public:
  using ModelIoError::ModelIoError;
};

class TruncatedError : public ModelIoError {
 public:
  using ModelIoError::ModelIoError;
};

class ChecksumError : public ModelIoError {
 public:
  using ModelIoError::ModelIoError;
};

// Requested metric has a zero denominator (no positive predictions, ...).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace psrec
