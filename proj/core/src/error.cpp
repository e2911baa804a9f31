#include "ssmlab/error.hpp"

namespace ssmlab {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::DistortionOutOfRange: return "DistortionOutOfRange";
    case Errc::RateNotOnCurve: return "RateNotOnCurve";
    case Errc::ModeUnsupported: return "ModeUnsupported";
    case Errc::Unstable: return "Unstable";
    case Errc::MultipleFixedPoints: return "MultipleFixedPoints";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::BadConfig: return "BadConfig";
    case Errc::MissingSummary: return "MissingSummary";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace ssmlab
