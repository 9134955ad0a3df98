#pragma once

#include <stdexcept>
#include <string>

namespace lebow {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input data (bad dimensions, corrupt files,
// non-SPD matrices, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// An encoder was handed an empty descriptor set.
class EmptyQuery : public DataError {
 public:
  using DataError::DataError;
};

// Eigensolver failure, exponent overflow, and other numeric breakdowns.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Bad command line or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace lebow
