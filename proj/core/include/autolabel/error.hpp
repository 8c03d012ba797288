#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autolabel {

enum class ErrorCode {
  // geometry
  kNonPositiveDepth,
  kInvalidDepth,
  kDegenerateView,
  // calibration
  kDisconnectedGraph,
  kInsufficientCorners,
  kDivergedSolve,
  kSingularNormalEquations,
  kMissingEntity,
  // fusion
  kUnknownCamera,
  kMismatchedFrameIndex,
  kEmptyGrid,
  // detect
  kBadCropShape,
  kDimensionMismatch,
  // track
  kNoColor,
  kFrameOrderViolation,
  // project
  kEmptyRegion,
  kNonPositiveHeight,
  // metrics
  kEmptyGroundTruth,
  // simulate
  kInvalidSpec,
  // annotate
  kUnknownId,
  kFrameConflict,
  kInvalidRange,
  kDigestMismatch,
  // pipeline / io
  kStreamLengthMismatch,
  kConfig,
  kData,
};

std::string_view ErrorCodeName(ErrorCode code);

// what() reads "<CodeName>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace autolabel
