#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace varflow {

enum class ErrorCode {
  DegenerateBasis,
  GridTooCoarse,
  SingularMap,
  GateViolated,
  MassBoundExceeded,
  OutOfSpan,
  SupportTooLarge,
  SolverFailure,
  NonpositiveWeight,
  ZeroBarrier,
  PreconditionViolated,
  GridMismatch,
  DegenerateSimplex,
  OpenMesh,
  SelfIntersectionSuspected,
  DeltaTooLarge,
  BallNotInterior,
  ConfigError,
  MissingFrames,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can dispatch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace varflow
