#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace corpusforge {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: TSV records, alignments, catalog lines, descriptors.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  /// 1-based line number of the offending record, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Transient failure (network); the caller may try again.
class RetryableError : public Error {
 public:
  using Error::Error;
};

/// A filter step failed. Carries the step name and whatever the child wrote to stderr.
class PipelineError : public Error {
 public:
  PipelineError(std::string step, const std::string& what, std::string stderr_text = {})
      : Error("filter step '" + step + "': " + what), step_(std::move(step)),
        stderr_(std::move(stderr_text)) {}

  const std::string& step() const noexcept { return step_; }
  const std::string& stderr_text() const noexcept { return stderr_; }

 private:
  std::string step_;
  std::string stderr_;
};

/// Snapshot could not be restored (corrupt, wrong version, config drift).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace corpusforge
