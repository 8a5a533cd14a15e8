#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace convex_order {

enum class ErrorCode {
  kInvalidDimension,
  kInvalidArgument,
  kNonpositiveAlpha,
  kLengthMismatch,
  kNonNormalizedWeights,
  kRejectionStall,
  kDimensionMismatch,
  kInfeasible,
  kNumericalFailure,
  kNumericalUnderflow,
  kSupportViolation,
  kBudgetExceeded,
  kSingleAnchorDegenerate,
  kSpanTooSmall,
  kDegenerateDomain,
  kSingularSystem,
  kNoConvergence,
  kUnsupportedDimension,
  kArbitrageInSheet,
  kInsufficientStrikes,
  kNoArbitrageMargin,
  kHypothesisViolated,
  kMalformedInput,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. The code identifies the failure mode so callers
/// (CLI exit codes, Python bindings) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace convex_order
