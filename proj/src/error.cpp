#include "resgame/error.hpp"

namespace resgame {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::kDriftDerivativeTooLarge: return "DriftDerivativeTooLarge";
    case ErrorCode::kNonPositiveDriftAtZero: return "NonPositiveDriftAtZero";
    case ErrorCode::kNoExtinctionBound: return "NoExtinctionBound";
    case ErrorCode::kStepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::kNonMonotone: return "NonMonotone";
    case ErrorCode::kSignViolation: return "SignViolation";
    case ErrorCode::kTruncationNotConverged: return "TruncationNotConverged";
    case ErrorCode::kNoSignChange: return "NoSignChange";
    case ErrorCode::kBracketFailure: return "BracketFailure";
    case ErrorCode::kOutOfDomain: return "OutOfDomain";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNoEquilibriumFound: return "NoEquilibriumFound";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kOrderingViolation: return "OrderingViolation";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace resgame
