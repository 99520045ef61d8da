#pragma once

#include <stdexcept>
#include <string>

namespace traffic2d {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A state lies outside the admissible set (negative density, occupancy above jam).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A parameter violates its invariant (r_max <= 0, zero normal, ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

/// A time step produced a cell outside the admissible set beyond clamp tolerance.
class StabilityError : public Error {
public:
  using Error::Error;
};

/// An iterative procedure ran out of budget.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Malformed input data or configuration.
class InputError : public Error {
public:
  using Error::Error;
};

}  // namespace traffic2d
