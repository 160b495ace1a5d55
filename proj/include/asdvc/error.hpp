#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asdvc {

enum class ErrorCode {
  NotATree,
  NonHomogeneous,
  NonPositiveReactance,
  DimensionMismatch,
  EmptyRegion,
  StepSizeTooLarge,
  GammaNotPositiveDefinite,
  Diverged,
  MaxIterExceeded,
  StaleBeyondChi,
  SingularSystem,
  PropertyViolated,
  NotConverged,
  MissingMeasurement,
  InvalidInput,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure carries a code so the CLI can map it
/// to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace asdvc
