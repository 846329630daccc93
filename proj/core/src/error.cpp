#include "varflow/error.hpp"

namespace varflow {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::SingularMap: return "SingularMap";
    case ErrorCode::GateViolated: return "GateViolated";
    case ErrorCode::MassBoundExceeded: return "MassBoundExceeded";
    case ErrorCode::OutOfSpan: return "OutOfSpan";
    case ErrorCode::SupportTooLarge: return "SupportTooLarge";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::ZeroBarrier: return "ZeroBarrier";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DegenerateSimplex: return "DegenerateSimplex";
    case ErrorCode::OpenMesh: return "OpenMesh";
    case ErrorCode::SelfIntersectionSuspected: return "SelfIntersectionSuspected";
    case ErrorCode::DeltaTooLarge: return "DeltaTooLarge";
    case ErrorCode::BallNotInterior: return "BallNotInterior";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingFrames: return "MissingFrames";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace varflow
