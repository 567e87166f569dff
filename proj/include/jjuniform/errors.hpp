#pragma once

#include <stdexcept>
#include <string>

namespace jju {

/// Base of every error thrown by the library. The `exit_code()` mapping is
/// what the command-line tool returns to the shell.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

/// Malformed input: bad files, bad config keys, violated preconditions.
class DataError : public Error {
public:
  using Error::Error;
};

class InvalidGeometry : public DataError {
public:
  using DataError::DataError;
};

/// Failures of a numerical procedure on otherwise well-formed input.
class NumericalError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// An electrode shadowed down to zero (or negative) width.
class FullyShadowed : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class Underdetermined : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class ExtractionFailure : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class UnattainableTarget : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace jju
