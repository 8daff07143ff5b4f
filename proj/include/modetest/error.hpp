#pragma once

#include <stdexcept>
#include <string>

namespace modetest {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument does not hold (bad range, bad parameter).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The sample contains repeated values but the operation needs distinct ones.
class TieError : public Error {
 public:
  explicit TieError(const std::string& where)
      : Error(where + ": sample contains tied values; jitter the data first "
                      "(e.g. --jitter 5e-4)") {}
};

// Bisection could not find a bracketing pair of bandwidths.
class BracketError : public Error {
 public:
  using Error::Error;
};

// The calibration density could not be assembled.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

}  // namespace modetest
