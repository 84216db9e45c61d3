#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vmsm {

enum class ErrorCode {
  // polyalg
  SingularMatrix,
  NoConvergence,
  ZeroConstantTerm,
  // msm_core
  UnknownMethod,
  Inconsistent,
  NotSchur,
  TailNotConverged,
  // quad_weights
  SingularSystem,
  MethodNotAdmitted,
  LengthMismatch,
  // solver
  SingularStartSystem,
  DiagonalKernelTooSmall,
  // stepsize
  EmptyLadder,
  // harness
  UnknownProblem,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZeroConstantTerm: return "ZeroConstantTerm";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::Inconsistent: return "Inconsistent";
    case ErrorCode::NotSchur: return "NotSchur";
    case ErrorCode::TailNotConverged: return "TailNotConverged";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::MethodNotAdmitted: return "MethodNotAdmitted";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingularStartSystem: return "SingularStartSystem";
    case ErrorCode::DiagonalKernelTooSmall: return "DiagonalKernelTooSmall";
    case ErrorCode::EmptyLadder: return "EmptyLadder";
    case ErrorCode::UnknownProblem: return "UnknownProblem";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Domain errors are caller mistakes (bad names, inadmissible inputs); the
/// rest are numerical failures. The CLI maps them to exit codes 2 and 3.
constexpr bool is_domain_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownMethod:
    case ErrorCode::UnknownProblem:
    case ErrorCode::MethodNotAdmitted:
    case ErrorCode::LengthMismatch:
    case ErrorCode::InvalidArgument:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vmsm
