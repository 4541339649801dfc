#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace feller {

// Base of every error thrown by the toolkit. The CLI maps the subclasses onto
// exit codes: InputError -> 2, ResourceError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatch, out-of-range parameters, invalid
// config fields.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite arithmetic, quadrature or LP failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A configured size cap was exceeded (support size, LP size, prune budget).
class ResourceError : public Error {
 public:
  using Error::Error;
};

// A degenerate object where a proper one is required (empty measure after
// pruning, non-unique stationary distribution).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Parameters outside the domain of a formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A ball split was requested with ball mass <= sigma. Carries the step of the
// inductive construction (0 for a standalone split) and the mass deficit
// sigma - mass(ball).
class InadmissibleSplit : public Error {
 public:
  InadmissibleSplit(std::size_t step, double required, double mass)
      : Error("inadmissible split at step " + std::to_string(step) + ": ball mass " +
              std::to_string(mass) + " <= required " + std::to_string(required)),
        step_(step),
        required_(required),
        mass_(mass) {}

  std::size_t step() const { return step_; }
  double required() const { return required_; }
  double mass() const { return mass_; }
  double deficit() const { return required_ - mass_; }

 private:
  std::size_t step_;
  double required_;
  double mass_;
};

}  // namespace feller
