#include "convex_order/error.hpp"

namespace convex_order {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNonpositiveAlpha: return "nonpositive-alpha";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kNonNormalizedWeights: return "non-normalized-weights";
    case ErrorCode::kRejectionStall: return "rejection-stall";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kNumericalFailure: return "numerical-failure";
    case ErrorCode::kNumericalUnderflow: return "numerical-underflow";
    case ErrorCode::kSupportViolation: return "support-violation";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kSingleAnchorDegenerate: return "single-anchor-degenerate";
    case ErrorCode::kSpanTooSmall: return "span-too-small";
    case ErrorCode::kDegenerateDomain: return "degenerate-domain";
    case ErrorCode::kSingularSystem: return "singular-system";
    case ErrorCode::kNoConvergence: return "no-convergence";
    case ErrorCode::kUnsupportedDimension: return "unsupported-dimension";
    case ErrorCode::kArbitrageInSheet: return "arbitrage-in-sheet";
    case ErrorCode::kInsufficientStrikes: return "insufficient-strikes";
    case ErrorCode::kNoArbitrageMargin: return "no-arbitrage-margin";
    case ErrorCode::kHypothesisViolated: return "hypothesis-violated";
    case ErrorCode::kMalformedInput: return "malformed-input";
  }
  return "unknown";
}

}  // namespace convex_order
