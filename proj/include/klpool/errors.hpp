#pragma once

#include <stdexcept>
#include <string>

namespace klpool {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on different sample spaces or have mismatched lengths.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside the domain where the operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or command line.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The plausible set and the combining set do not intersect.
class EmptyIntersectionError : public Error {
 public:
  using Error::Error;
};

/// An iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_gap)
      : Error(what), last_gap_(last_gap) {}

  double last_gap() const noexcept { return last_gap_; }

 private:
  double last_gap_;
};

}  // namespace klpool
