#pragma once

#include <stdexcept>
#include <string>

namespace greenpot {

// Failure categories surfaced by the library. The CLI maps ConfigParse to
// exit code 2 and everything else to a named failure in the run manifest.
enum class ErrorCode {
  DimensionTooSmall,
  DimensionTooLarge,
  NotNormalizable,
  AsymmetricKernel,
  MomentDiverges,
  GridTooSmall,
  SlowConvergence,
  SingularityOrderViolation,
  NonpositiveLambda,
  CoincidingPoints,
  InsufficientDecade,
  EllipticityViolation,
  StepTooLarge,
  OverlappingBoxes,
  SupportEscapesGrid,
  NotInCL,
  SymmetryViolation,
  ConfigParse,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NotNormalizable: return "NotNormalizable";
    case ErrorCode::AsymmetricKernel: return "AsymmetricKernel";
    case ErrorCode::MomentDiverges: return "MomentDiverges";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::SlowConvergence: return "SlowConvergence";
    case ErrorCode::SingularityOrderViolation: return "SingularityOrderViolation";
    case ErrorCode::NonpositiveLambda: return "NonpositiveLambda";
    case ErrorCode::CoincidingPoints: return "CoincidingPoints";
    case ErrorCode::InsufficientDecade: return "InsufficientDecade";
    case ErrorCode::EllipticityViolation: return "EllipticityViolation";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::OverlappingBoxes: return "OverlappingBoxes";
    case ErrorCode::SupportEscapesGrid: return "SupportEscapesGrid";
    case ErrorCode::NotInCL: return "NotInCL";
    case ErrorCode::SymmetryViolation: return "SymmetryViolation";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, std::string(error_code_name(code)) + ": " + msg);
}

}  // namespace greenpot
