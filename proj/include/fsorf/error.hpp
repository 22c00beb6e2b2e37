#pragma once

#include <stdexcept>
#include <string>

namespace fsorf {

/// Invalid input: a parameter outside its domain, a malformed config.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that could not produce a trustworthy number.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Quadrature or iteration did not reach its tolerance.
class ConvergenceError : public NumericError {
  public:
    using NumericError::NumericError;
};

/// The steady-state system has no unique solution.
class SingularChainError : public NumericError {
  public:
    using NumericError::NumericError;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ValidationError(what);
    }
}

}  // namespace detail

}  // namespace fsorf
