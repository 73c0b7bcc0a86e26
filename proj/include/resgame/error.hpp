#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace resgame {

// Failure categories surfaced by the solvers. The CLI maps these onto exit
// codes, tests match on them.
enum class ErrorCode {
  kNonPositiveSigma,
  kDriftDerivativeTooLarge,
  kNonPositiveDriftAtZero,
  kNoExtinctionBound,
  kStepSizeUnderflow,
  kNonMonotone,
  kSignViolation,
  kTruncationNotConverged,
  kNoSignChange,
  kBracketFailure,
  kOutOfDomain,
  kDomainError,
  kSingularSystem,
  kNoEquilibriumFound,
  kNoConvergence,
  kOrderingViolation,
  kInvalidConfig,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace resgame
