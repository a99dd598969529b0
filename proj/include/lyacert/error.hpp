#pragma once

#include <stdexcept>

namespace lyacert {

/// Malformed or out-of-contract user input (bad CSV, dimension mismatch, bad config).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A domain type was asked to hold a value that breaks its invariant.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lyacert
