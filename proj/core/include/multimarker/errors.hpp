#pragma once

#include <stdexcept>
#include <string>

namespace multimarker {

/// Base error carrying a machine-readable category for CLI exit mapping.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// Invalid distribution or model parameter (e.g. non-positive variance).
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& message) : Error("parameter", message) {}
};

/// Malformed or inconsistent input data (names offending row/column).
class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error("data", message) {}
};

/// Operation called in an unsupported configuration (e.g. missing doses).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error("usage", message) {}
};

/// Filesystem / parsing failures.
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

/// Chain/dataset pairing violations detected at predict time.
class MismatchError : public Error {
 public:
  explicit MismatchError(const std::string& message) : Error("mismatch", message) {}
};

}  // namespace multimarker
