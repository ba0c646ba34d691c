#pragma once

#include <stdexcept>
#include <string>

namespace pubopt {

/// Input outside a function's mathematical domain (e.g. theta > theta_hat).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent parameters (negative capacity, bad partition, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver gave up. Subclasses carry solver-specific diagnostics.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pubopt
