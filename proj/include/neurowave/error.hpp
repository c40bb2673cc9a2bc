#pragma once

#include <stdexcept>
#include <string>

namespace neurowave {

// Base of every error raised by the library. The CLI maps the concrete
// subclass onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, malformed files or configs (exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

// Data that is well-formed but unusable, e.g. a single-class training set
// (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-convergence, NaN losses, rank deficiency (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, int iterations)
      : NumericalError(what + " (after " + std::to_string(iterations) + " iterations)"),
        detail_(what),
        iterations_(iterations) {}
  int iterations() const { return iterations_; }
  // The message without the iteration suffix.
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  int iterations_;
};

}  // namespace neurowave
