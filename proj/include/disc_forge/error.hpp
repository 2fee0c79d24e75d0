#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace disc_forge {

// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record could not be parsed or is missing a field.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, std::string field, const std::string& what)
      : Error(describe(line, field, what)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string describe(std::size_t line, const std::string& field,
                              const std::string& what) {
    std::string msg;
    if (line > 0) msg += "line " + std::to_string(line) + ": ";
    if (!field.empty()) msg += "field '" + field + "': ";
    return msg + what;
  }

  std::size_t line_;
  std::string field_;
};

// A parsed value violates a type invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Attention row does not sum to one within tolerance.
class NormalizationError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

// Segment offsets exceed the trace's input length.
class BoundsError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

// Bad flags, missing required inputs, authentication failures.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// One example cannot be processed; the caller tallies and moves on.
class SkipError : public Error {
 public:
  using Error::Error;
};

// Network failure that outlived the retry budget. The resume cursor has
// been persisted when this is thrown.
class TransientError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace disc_forge
