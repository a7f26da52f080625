#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refcast {

enum class ErrorCode {
  InvalidArgument,
  MissingField,
  ZeroForecast,
  MixedBasis,
  ParseError,
  IoError,
  ValidationFailed,
  NoMatch,
  ClassTooSmall,
  MetricMismatch,
  InsufficientPairs,
  DegenerateVariance,
  VariableMismatch,
  NoSignChange,
  NoRootInBracket,
};

/// Stable upper-snake identifier used in machine-readable error lines.
constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::MissingField: return "MISSING_FIELD";
    case ErrorCode::ZeroForecast: return "ZERO_FORECAST";
    case ErrorCode::MixedBasis: return "MIXED_BASIS";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::ValidationFailed: return "VALIDATION";
    case ErrorCode::NoMatch: return "NO_MATCH";
    case ErrorCode::ClassTooSmall: return "CLASS_TOO_SMALL";
    case ErrorCode::MetricMismatch: return "METRIC_MISMATCH";
    case ErrorCode::InsufficientPairs: return "INSUFFICIENT_PAIRS";
    case ErrorCode::DegenerateVariance: return "DEGENERATE_VARIANCE";
    case ErrorCode::VariableMismatch: return "VARIABLE_MISMATCH";
    case ErrorCode::NoSignChange: return "NO_SIGN_CHANGE";
    case ErrorCode::NoRootInBracket: return "NO_ROOT_IN_BRACKET";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace refcast
