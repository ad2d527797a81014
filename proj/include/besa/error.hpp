#pragma once

#include <stdexcept>
#include <string>

namespace besa {

// Error categories, used by the CLI to pick exit codes: usage-type errors
// (bad input files, mismatched dimensions) exit 1, numerical failures
// (degenerate geometry mid-solve, non-convergence) exit 2.
enum class ErrorKind {
  io,          // file missing / unreadable / unwritable
  parse,       // malformed mesh or JSON input
  invalid,     // contract violation (dimension mismatch, bad argument)
  degenerate,  // degenerate geometry where the metric is undefined
  numerical,   // solver failure
  internal,    // inconsistency that indicates a bug
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace besa
