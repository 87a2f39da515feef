#pragma once

#include <stdexcept>
#include <string>

namespace wbe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad files, out-of-range parameters, violated preconditions.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A computation was refused because the instance exceeds a configured size cap.
class Refusal : public Error {
 public:
  using Error::Error;
};

/// An internal invariant failed; signals a bug rather than bad input.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

}  // namespace wbe
