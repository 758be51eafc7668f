#pragma once

#include <stdexcept>
#include <string>

namespace moodkit {

// Every failure raised by the library derives from Error so the CLI can map
// categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A track that has no usable frames left after filtering.
class RejectedTrackError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameter or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape or model structure mismatch.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Training data that cannot support the requested objective.
class DataError : public Error {
 public:
  using Error::Error;
};

/// An upstream artifact is stale or was modified after it was written.
class UpstreamHashError : public Error {
 public:
  using Error::Error;
};

}  // namespace moodkit
