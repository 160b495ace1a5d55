#include "asdvc/error.hpp"

namespace asdvc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotATree: return "NotATree";
    case ErrorCode::NonHomogeneous: return "NonHomogeneous";
    case ErrorCode::NonPositiveReactance: return "NonPositiveReactance";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::StepSizeTooLarge: return "StepSizeTooLarge";
    case ErrorCode::GammaNotPositiveDefinite: return "GammaNotPositiveDefinite";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::StaleBeyondChi: return "StaleBeyondChi";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::PropertyViolated: return "PropertyViolated";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::MissingMeasurement: return "MissingMeasurement";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace asdvc
