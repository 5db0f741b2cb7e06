#pragma once

#include <stdexcept>
#include <string>

namespace marangoni {

// Failure taxonomy. Every throwing path in the library uses one of these codes so
// callers (and the CLI exit-code mapping) can react without string matching.
enum class ErrorCode {
  PreconditionError,   // caller passed arguments outside the documented domain
  NonConvergence,
  GapViolation,
  BranchError,
  PoleError,
  ContourThroughRoot,
  BudgetExceeded,
  BVPSingular,
  DegeneratePairing,
  SupportViolation,
  MeanViolation,
  RankDeficient,
  PivotUnderflow,
  StepSizeUnderflow,
  CFLViolation,
  NaNDetected,
  DecompositionFailed,
  MismatchedBases,
  QuadratureFailure,
  Blowup,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace marangoni
