#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csol {

enum class ErrorCode {
  UnboundedPolytope,
  DegenerateInput,
  UnboundedSlice,
  DimensionMismatch,
  InvalidDecomposition,
  ArityMismatch,
  OriginNotInterior,
  MaxIterationsExceeded,
  LineSearchStall,
  GridTooCoarse,
  BoxTooSmall,
  NonConvexIterate,
  SingularLinearization,
  ConvexityLost,
  NewtonStall,
  PathStuck,
  NotConverged,
  EigenSolveFailure,
  ToleranceNotReached,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }
  // The message without the error-name prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace csol
