#include "aggmorph/error.h"

namespace aggmorph {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyMesh: return "EmptyMesh";
    case ErrorCode::kInvalidIndex: return "InvalidIndex";
    case ErrorCode::kDegenerateFace: return "DegenerateFace";
    case ErrorCode::kNonWatertight: return "NonWatertight";
    case ErrorCode::kInconsistentOrientation: return "InconsistentOrientation";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kZeroExtent: return "ZeroExtent";
    case ErrorCode::kNonPositiveInput: return "NonPositiveInput";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kOutOfFrame: return "OutOfFrame";
    case ErrorCode::kNoForeground: return "NoForeground";
    case ErrorCode::kSelfIntersecting: return "SelfIntersecting";
    case ErrorCode::kDegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::kOrderViolation: return "OrderViolation";
    case ErrorCode::kInsufficientViews: return "InsufficientViews";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kLabelMismatch: return "LabelMismatch";
    case ErrorCode::kInsufficientCorrespondences:
      return "InsufficientCorrespondences";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kZeroLocalDistance: return "ZeroLocalDistance";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kAtInfinity: return "AtInfinity";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kInvalidScene: return "InvalidScene";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kUnderConstrained: return "UnderConstrained";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonPositiveMeasurement: return "NonPositiveMeasurement";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kZeroMean: return "ZeroMean";
    case ErrorCode::kEmptyViews: return "EmptyViews";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kNonTriangular: return "NonTriangular";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code),
      detail_(message) {}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace aggmorph
