#pragma once

#include <stdexcept>
#include <string>

namespace samid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition, malformed configuration or shape mismatch.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The data or model is degenerate for the requested computation
/// (rank deficiency, empty clusters, complex roots, ...).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace samid
