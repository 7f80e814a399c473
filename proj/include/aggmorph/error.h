#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aggmorph {

enum class ErrorCode {
  // Mesh geometry.
  kEmptyMesh,
  kInvalidIndex,
  kDegenerateFace,
  kNonWatertight,
  kInconsistentOrientation,
  kDegenerateInput,
  kZeroExtent,
  kNonPositiveInput,
  kInsufficientPoints,
  // Silhouettes.
  kOutOfFrame,
  kNoForeground,
  kSelfIntersecting,
  kDegeneratePolygon,
  kOrderViolation,
  // Markers and registration.
  kInsufficientViews,
  kIllConditioned,
  kDegenerate,
  kCountMismatch,
  kLabelMismatch,
  kInsufficientCorrespondences,
  kMissingLabel,
  kZeroLocalDistance,
  kInvalidInput,
  // Structure from motion.
  kAtInfinity,
  kBehindCamera,
  kInvalidScene,
  kDivergenceDetected,
  kSingularSystem,
  kUnderConstrained,
  kInvalidConfig,
  // Statistics.
  kEmptyInput,
  kNonPositiveMeasurement,
  kInsufficientSamples,
  kZeroMean,
  kEmptyViews,
  // File formats.
  kUnsupportedFormat,
  kMalformedRecord,
  kNonTriangular,
  kTruncatedFile,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure in the library surfaces as this exception. The code is the
// machine-readable kind; what() carries the human context (offending edge,
// observation index, file offset, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // The message without the code-name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

}  // namespace aggmorph
