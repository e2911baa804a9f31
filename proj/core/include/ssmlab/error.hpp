#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssmlab {

enum class Errc {
  DimensionMismatch,
  NotPositiveDefinite,
  NotSymmetric,
  NoConvergence,
  NonFiniteState,
  OutOfRange,
  DistortionOutOfRange,
  RateNotOnCurve,
  ModeUnsupported,
  Unstable,
  MultipleFixedPoints,
  IndexOutOfRange,
  InvalidConfig,
  NonFiniteLoss,
  DivergedLoss,
  BadConfig,
  MissingSummary,
};

std::string_view to_string(Errc code) noexcept;

// All library failures surface as ssmlab::Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ssmlab
