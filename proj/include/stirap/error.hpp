#pragma once

#include <stdexcept>
#include <string>

namespace stirap {

/// Bad user input: malformed files, invalid quantum numbers, bad configuration.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A term symbol or table row that could not be parsed.
class ParseError : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure during a run (norm drift, non-convergence, undefined response).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stirap
