#pragma once

#include <stdexcept>
#include <string>

namespace carm {

enum class ErrorKind {
  InvalidArgument,
  InvalidSpan,
  DegenerateRay,
  EmptyStack,
  DomainMismatch,
  NonPositiveInitial,
  OutOfBounds,
  NoPeak,
  ZeroSignal,
  DegenerateContrast,
  SizeMismatch,
  MissingField,
  UnsupportedVersion,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; the kind is what callers branch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace carm
