#include "autolabel/error.hpp"

namespace autolabel {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kInvalidDepth: return "InvalidDepth";
    case ErrorCode::kDegenerateView: return "DegenerateView";
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kInsufficientCorners: return "InsufficientCorners";
    case ErrorCode::kDivergedSolve: return "DivergedSolve";
    case ErrorCode::kSingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::kMissingEntity: return "MissingEntity";
    case ErrorCode::kUnknownCamera: return "UnknownCamera";
    case ErrorCode::kMismatchedFrameIndex: return "MismatchedFrameIndex";
    case ErrorCode::kEmptyGrid: return "EmptyGrid";
    case ErrorCode::kBadCropShape: return "BadCropShape";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNoColor: return "NoColor";
    case ErrorCode::kFrameOrderViolation: return "FrameOrderViolation";
    case ErrorCode::kEmptyRegion: return "EmptyRegion";
    case ErrorCode::kNonPositiveHeight: return "NonPositiveHeight";
    case ErrorCode::kEmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kFrameConflict: return "FrameConflict";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kDigestMismatch: return "DigestMismatch";
    case ErrorCode::kStreamLengthMismatch: return "StreamLengthMismatch";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kData: return "DataError";
  }
  return "Unknown";
}

}  // namespace autolabel
