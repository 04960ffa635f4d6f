#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edenmech {

enum class ErrorKind {
  UnbalancedParen,
  UnknownIdentifier,
  BadIndex,
  EmptyInput,
  SyntaxError,
  MechanicalTypeViolation,
  DomainError,
  NotSPD,
  RankDeficient,
  ConfigError,
  NotOnConstraint,
  StepFailure,
  DimensionMismatch,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnbalancedParen: return "UnbalancedParen";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::BadIndex: return "BadIndex";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::MechanicalTypeViolation: return "MechanicalTypeViolation";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NotSPD: return "NotSPD";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::NotOnConstraint: return "NotOnConstraint";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
  }
  return "Unknown";
}

/// Base exception for everything the library throws.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure; column is 1-based and points at the offending character
/// (or one past the end of input).
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, std::size_t column, const std::string& message)
      : Error(kind, message + " at column " + std::to_string(column)), column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// True for failures that originate in numerics rather than in user input.
inline bool is_numerical(ErrorKind kind) {
  return kind == ErrorKind::DomainError || kind == ErrorKind::NotSPD ||
         kind == ErrorKind::RankDeficient || kind == ErrorKind::StepFailure;
}

}  // namespace edenmech
