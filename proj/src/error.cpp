#include "dcml/error.hpp"

namespace dcml {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::SingularDesign: return "singular-design";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::DegenerateData: return "degenerate-data";
    case ErrorCode::DegenerateWeights: return "degenerate-weights";
    case ErrorCode::InvalidMatrix: return "invalid-matrix";
    case ErrorCode::InvalidDistribution: return "invalid-distribution";
    case ErrorCode::InvalidScenario: return "invalid-scenario";
    case ErrorCode::InvalidFilter: return "invalid-filter";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::Numerical: return "numerical";
  }
  return "unknown";
}

bool Error::is_usage_error() const noexcept {
  switch (code_) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::InvalidScenario:
    case ErrorCode::InvalidFilter:
    case ErrorCode::InvalidDistribution:
    case ErrorCode::ParseError:
      return true;
    default:
      return false;
  }
}

}  // namespace dcml
