#include "csol/errors.hpp"

namespace csol {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnboundedPolytope: return "UnboundedPolytope";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UnboundedSlice: return "UnboundedSlice";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidDecomposition: return "InvalidDecomposition";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::OriginNotInterior: return "OriginNotInterior";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::LineSearchStall: return "LineSearchStall";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::BoxTooSmall: return "BoxTooSmall";
    case ErrorCode::NonConvexIterate: return "NonConvexIterate";
    case ErrorCode::SingularLinearization: return "SingularLinearization";
    case ErrorCode::ConvexityLost: return "ConvexityLost";
    case ErrorCode::NewtonStall: return "NewtonStall";
    case ErrorCode::PathStuck: return "PathStuck";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::EigenSolveFailure: return "EigenSolveFailure";
    case ErrorCode::ToleranceNotReached: return "ToleranceNotReached";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace csol
