#include "carm/error.hpp"

namespace carm {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidSpan: return "InvalidSpan";
    case ErrorKind::DegenerateRay: return "DegenerateRay";
    case ErrorKind::EmptyStack: return "EmptyStack";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::NonPositiveInitial: return "NonPositiveInitial";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::NoPeak: return "NoPeak";
    case ErrorKind::ZeroSignal: return "ZeroSignal";
    case ErrorKind::DegenerateContrast: return "DegenerateContrast";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace carm
