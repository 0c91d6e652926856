#pragma once

#include <stdexcept>
#include <string>

namespace chaosx {

// Base of every error thrown by the library. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite input or an argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The homogeneous function fails the smoothness/rank condition at its sphere
// maxima, or the maximizer set has a shape the library does not handle.
class ConditionViolation : public Error {
 public:
  using Error::Error;
};

// Spherical chart evaluated too close to a pole; rotate the chart.
class ChartError : public Error {
 public:
  using Error::Error;
};

// Asymptotic formula requested below its validity floor.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Both circulant embedding and dense factorization failed.
class SimulationError : public Error {
 public:
  using Error::Error;
};

// A formula was asked for a model outside its hypotheses.
class ApplicabilityError : public Error {
 public:
  using Error::Error;
};

// A constant needed by a formula is not available in the constants table.
class DependencyError : public Error {
 public:
  DependencyError(const std::string& what, std::string key)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Truncated horizon is too short for the requested constant.
class HorizonError : public Error {
 public:
  using Error::Error;
};

// Violated precondition of an operation (bad sizes, zero samples, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Configuration problem; carries the JSON path of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : Error(path.empty() ? msg : path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace chaosx
