#pragma once

#include <stdexcept>
#include <string>

namespace fairsketch {

enum class ErrorKind {
  EmptyLog,
  MalformedRecord,
  MissingGroup,
  MissingGroupInBatch,
  UndefinedRate,
  Shape,
  Config,
  Format,
  EmptyDataset,
  NonFiniteLoss,
  MismatchedCache,
  UnknownAttribute,
  CountMismatch,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// All errors raised by the library. `kind()` tells callers which contract
/// was violated; the CLI maps kinds onto stable exit codes.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Message without the kind prefix, for rethrowing with added context.
  const std::string& message() const noexcept { return message_; }

private:
  ErrorKind kind_;
  std::string message_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyLog: return "EmptyLog";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::MissingGroup: return "MissingGroup";
    case ErrorKind::MissingGroupInBatch: return "MissingGroupInBatch";
    case ErrorKind::UndefinedRate: return "UndefinedRate";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::MismatchedCache: return "MismatchedCache";
    case ErrorKind::UnknownAttribute: return "UnknownAttribute";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

}  // namespace fairsketch
