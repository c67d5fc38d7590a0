#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lqmp {

enum class ErrorCode {
  kDimensionMismatch,
  kNotControllable,
  kDependentActiveSet,
  kInfeasibleActiveSet,
  kDegenerateOde,
  kUnderdeterminedMultipliers,
  kNoControlAuthority,
  kSingularBoundarySystem,
  kCountMismatch,
  kNoRoot,
  kIllConditioned,
  kOutOfHorizon,
  kHeuristicExhausted,
  kQpInfeasible,
  kNonConvex,
  kRiccatiFailure,
  kInvalidInput,
  kCacheMismatch,
};

std::string_view to_string(ErrorCode code);

/// All library failures are reported through this exception; `code()` names
/// the failure category so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotControllable: return "NotControllable";
    case ErrorCode::kDependentActiveSet: return "DependentActiveSet";
    case ErrorCode::kInfeasibleActiveSet: return "InfeasibleActiveSet";
    case ErrorCode::kDegenerateOde: return "DegenerateOde";
    case ErrorCode::kUnderdeterminedMultipliers: return "UnderdeterminedMultipliers";
    case ErrorCode::kNoControlAuthority: return "NoControlAuthority";
    case ErrorCode::kSingularBoundarySystem: return "SingularBoundarySystem";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kNoRoot: return "NoRoot";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kOutOfHorizon: return "OutOfHorizon";
    case ErrorCode::kHeuristicExhausted: return "HeuristicExhausted";
    case ErrorCode::kQpInfeasible: return "QpInfeasible";
    case ErrorCode::kNonConvex: return "NonConvex";
    case ErrorCode::kRiccatiFailure: return "RiccatiFailure";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kCacheMismatch: return "CacheMismatch";
  }
  return "Unknown";
}

}  // namespace lqmp
