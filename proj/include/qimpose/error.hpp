#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qimpose {

enum class ErrorCode {
  InvalidInput,
  InvalidState,
  InvalidSubsystem,
  UnsupportedDimension,
  DegenerateEffect,
  InvalidMeasurementKind,
  TooLargeScenario,
  UnsupportedOutcomes,
  NotViolatedAtAnyEfficiency,
  DegenerateIterate,
};

std::string_view toString(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(toString(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qimpose
