#pragma once

#include <stdexcept>

namespace htbnn {

/// Malformed architecture, coefficient vector or calculus operands.
struct StructuralError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An argument violates a stated precondition (bounds, ranges, widths).
struct PreconditionError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A density fails one of the heavy-tail conditions.
struct DensityError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Invalid configuration file or command line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure that could not be recovered (non-finite values after retries).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace htbnn
