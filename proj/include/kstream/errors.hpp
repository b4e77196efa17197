#pragma once

#include <stdexcept>
#include <string>

namespace kstream {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration document or ingress record.
class ParseError : public Error {
 public:
  using Error::Error;
};

// The configuration cannot drive the pipeline.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A configuration invariant does not hold. Carries the offending field.
class ValidationError : public ConfigError {
 public:
  ValidationError(std::string field, const std::string& rule)
      : ConfigError("invalid '" + field + "': " + rule), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// An attribute is missing or holds a value of the wrong kind.
class TypeMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownCategory : public Error {
 public:
  using Error::Error;
};

// Raised when an attribute exceeds the categorizer's distinct-value guard.
class CardinalityExceeded : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Internal engine precondition broken.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace kstream
