#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace resq {

enum class ErrorCode {
  kInvalidArgument,
  kNonPhysical,
  kDegenerate,
  kInsufficientSpan,
  kDidNotConverge,
  kFixedPointDiverged,
  kEmptyInput,
  kParseError,
  kValidationError,
  kIoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` tells callers which
/// failure class occurred. Parse and validation errors carry the 1-based
/// line number of the offending input row (0 when not applicable).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::size_t line = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace resq
