#pragma once

#include <stdexcept>
#include <string>

namespace vortexlab {

enum class ErrorCode {
  NonPositivePeriod,
  UnsupportedDimension,
  InvalidGrid,
  BidegreeMismatch,
  RadiusTooLarge,
  BundleMismatch,
  ShapeMismatch,
  NonUnitaryGauge,
  NonIntegralCharge,
  NonpositiveSigmaDenominator,
  ThresholdViolated,
  Diverged,
  MaxIters,
  SingularLinearization,
  IncompatibleTopology,
  ResidualTooLarge,
  FieldTooLarge,
  HypothesisUnmet,
  EmptySubobject,
  RankTwoSecondFactor,
  ConfigInvalid,
  ArtifactMissing,
  ArtifactCorrupt,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vortexlab
