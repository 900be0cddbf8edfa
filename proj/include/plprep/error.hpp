#pragma once

#include <stdexcept>
#include <string>

namespace plprep {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the parameter space or the function's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed (non-finite values, non-convergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Zero is not in the interior of the convex hull of the score contributions.
class HullError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace plprep
