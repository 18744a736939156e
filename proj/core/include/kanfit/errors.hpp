#pragma once

#include <stdexcept>
#include <string>

namespace kanfit {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a basis family (e.g. |x| > 1 for Chebyshev).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameter or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Mismatched lengths, dimensions or layer chains.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (CSV, config, results file). Message carries the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Model file truncated or internally inconsistent.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Correlation undefined or metric precondition violated.
class MetricError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error("diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace kanfit
