#pragma once

#include <stdexcept>
#include <string>

namespace dcml {

enum class ErrorCode {
  InvalidParameter,
  SingularDesign,
  InsufficientData,
  DegenerateData,
  DegenerateWeights,
  InvalidMatrix,
  InvalidDistribution,
  InvalidScenario,
  InvalidFilter,
  ParseError,
  Numerical,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for bad input (flags, files, parameters) as opposed to a numerical
  /// breakdown of an estimator.
  bool is_usage_error() const noexcept;

 private:
  ErrorCode code_;
};

}  // namespace dcml
