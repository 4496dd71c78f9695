#pragma once

#include <stdexcept>
#include <string>

namespace rapsim {

/// Bad input: violated precondition, malformed config or file.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The numerics gave up (step underflow, invariant drift, aliasing).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace detail
}  // namespace rapsim
