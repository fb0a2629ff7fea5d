#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace farsec {

enum class ErrorCode {
  InvalidParameter,
  SourceUnavailable,
  UnsupportedFormat,
  FrameShapeMismatch,
  DetectorError,
  TraceParseError,
  DegenerateLine,
  NoIntersection,
  InsufficientSamples,
  InvalidTimestamps,
  BadDepthSample,
  CalibrationFailed,
  InsufficientEvidence,
  InvalidPair,
  DegenerateTrack,
  UnknownVehicle,
  EmptyEvaluation,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::SourceUnavailable: return "SourceUnavailable";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::FrameShapeMismatch: return "FrameShapeMismatch";
    case ErrorCode::DetectorError: return "DetectorError";
    case ErrorCode::TraceParseError: return "TraceParseError";
    case ErrorCode::DegenerateLine: return "DegenerateLine";
    case ErrorCode::NoIntersection: return "NoIntersection";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InvalidTimestamps: return "InvalidTimestamps";
    case ErrorCode::BadDepthSample: return "BadDepthSample";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::InsufficientEvidence: return "InsufficientEvidence";
    case ErrorCode::InvalidPair: return "InvalidPair";
    case ErrorCode::DegenerateTrack: return "DegenerateTrack";
    case ErrorCode::UnknownVehicle: return "UnknownVehicle";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every recoverable failure in the core is reported as an Error carrying a
/// machine-readable code; the C API maps codes onto status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace farsec
