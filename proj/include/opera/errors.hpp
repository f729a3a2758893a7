#pragma once

#include <stdexcept>
#include <string>

namespace opera {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Exact search or enumeration refused because it would exceed its budget.
class SizeLimitExceeded : public Error {
 public:
  using Error::Error;
};

class IterationLimit : public Error {
 public:
  using Error::Error;
};

// A simulated round broke a matching or occupancy invariant.
class InvariantViolation : public Error {
 public:
  InvariantViolation(int round, const std::string& what)
      : Error("round " + std::to_string(round) + ": " + what), round_(round) {}
  int round() const { return round_; }

 private:
  int round_;
};

class InconsistentState : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace opera
