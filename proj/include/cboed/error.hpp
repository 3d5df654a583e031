#pragma once

#include <stdexcept>
#include <string>

namespace cboed {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIndexOutOfRange,
  kDuplicateIndex,
  kOutOfDomain,
  kDimensionMismatch,
  kDegenerateDimension,
  kDimensionCapExceeded,
  kInfeasibleObservation,
  kAllCentersInfeasible,
  kTooFewAccepted,
  kEmptyDesignSpace,
  kUnsupportedModel,
  kModelEvaluationFailed,
  kSolverDidNotConverge,
  kParseError,
  kValidationError,
  kIoError,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this type; the C API maps the
// code onto its integer status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ValidationError(field, reason) from the config loader.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, std::string reason)
      : Error(ErrorCode::kValidationError, field + ": " + reason),
        field_(std::move(field)),
        reason_(std::move(reason)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error(ErrorCode::kParseError,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace cboed
