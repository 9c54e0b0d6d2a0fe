#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace txpredict {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trace violates the structural rules of an execution (dangling writer,
/// position regression, read of a key the writer never wrote, ...).
class MalformedTrace : public Error {
 public:
  using Error::Error;
};

/// Syntax error in the textual trace format.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed syntax with inconsistent content (duplicate tid, position
/// regression, bad schedule).
class SemanticError : public Error {
 public:
  SemanticError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// The requested solver backend is not compiled in.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

/// The solver returned "unknown" where a definite answer was required.
class SolverUnknown : public Error {
 public:
  using Error::Error;
};

/// Brute-force oracle refused an input above its size guard.
class TooLarge : public Error {
 public:
  using Error::Error;
};

/// A solver model contradicts an invariant the encoding guarantees.
class InconsistentModel : public Error {
 public:
  using Error::Error;
};

/// Replaying a workload does not match the predicted session/transaction skeleton.
class ReplayMismatch : public Error {
 public:
  using Error::Error;
};

/// Invalid workload script or workload configuration.
class WorkloadError : public Error {
 public:
  using Error::Error;
};

}  // namespace txpredict
