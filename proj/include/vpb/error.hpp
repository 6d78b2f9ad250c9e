#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpb {

enum class ErrorCode {
  InvalidArgument,
  // geometry
  DegenerateCorrespondence,
  SamplingExhausted,
  PointAtInfinity,
  SingularMatrix,
  EmptyIntersection,
  DegeneratePolygon,
  // imageops
  CropTooSmall,
  IoError,
  UnsupportedPngVariant,
  // embedio
  FormatError,
  ChecksumMismatch,
  // probe / knn
  ShapeMismatch,
  KTooLarge,
  LineSearchFailure,
  // protocols
  InvalidConfig,
  InvalidManifest,
  MissingEmbedding,
  InsufficientViews,
  ClassTooSmall,
  // report
  EmptyInput,
  ZeroBaseline,
  MissingBaseline,
  NotEnoughRows,
  // cli
  UsageError,
  AlreadyExists,
  Internal,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateCorrespondence: return "DegenerateCorrespondence";
    case ErrorCode::SamplingExhausted: return "SamplingExhausted";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::CropTooSmall: return "CropTooSmall";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnsupportedPngVariant: return "UnsupportedPngVariant";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::InsufficientViews: return "InsufficientViews";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::MissingBaseline: return "MissingBaseline";
    case ErrorCode::NotEnoughRows: return "NotEnoughRows";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::AlreadyExists: return "AlreadyExists";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is the stable,
/// machine-readable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vpb
