#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biopsim {

enum class ErrorCode {
  CollinearLandmarks,
  LengthMismatch,
  NoIntersection,
  GridTooLarge,
  NoTrailFound,
  AmbiguousTrail,
  TemplateInfeasible,
  ValidationFailed,
  EmptySample,
  DegenerateSample,
  CalibrationFailed,
  UnpairedData,
  BadInput,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the toolkit; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace biopsim
