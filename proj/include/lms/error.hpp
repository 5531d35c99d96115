#pragma once

#include <stdexcept>
#include <string>

namespace lms {

/// Violated precondition on an argument (bad geometry, incompatible lattices, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a numerically degenerate problem (rank-deficient fit, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lms
