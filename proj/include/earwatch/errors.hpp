#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace earwatch {

/// Base class for every error the engine raises on purpose. Anything else
/// escaping the library is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The horizontal eye corners coincide, so the aspect ratio is undefined.
/// Raised instead of returning 0 because a zero would read as a closed eye.
class DegenerateEyeError : public Error {
 public:
  using Error::Error;
};

/// Malformed record syntax (bad JSON, wrong CSV field count, unparsable
/// number). Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Syntactically valid record that violates the frame-record schema
/// (wrong landmark count, non-finite value, unknown field, ...).
class SchemaError : public Error {
 public:
  SchemaError(const std::string& message, std::string field_path,
              std::size_t line = 0)
      : Error((line ? "line " + std::to_string(line) + ": " : std::string{}) +
              (field_path.empty() ? message : field_path + ": " + message)),
        field_path_(std::move(field_path)),
        line_(line) {}

  const std::string& field_path() const noexcept { return field_path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_path_;
  std::size_t line_ = 0;
};

/// Frame timestamps must be strictly increasing; a violation means the
/// trace is corrupt or unsorted.
class NonMonotonicTimestampError : public Error {
 public:
  using Error::Error;
};

/// PERCLOS was queried before any frame was processed.
class EmptyWindowError : public Error {
 public:
  using Error::Error;
};

class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

/// A scenario script violates its invariants (overlapping segments,
/// segments outside the trace duration, inverted baselines, ...).
class InvalidScriptError : public Error {
 public:
  using Error::Error;
};

/// Requested benchmark row name does not exist.
class UnknownRowError : public Error {
 public:
  using Error::Error;
};

/// One of the bundled scenario files is missing from the scenario directory.
class MissingScenarioError : public Error {
 public:
  using Error::Error;
};

/// correct_rate over an empty test set.
class ZeroTotalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace earwatch
