#include "fedboost/error.hpp"

#include <fmt/format.h>

namespace fedboost {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::kArityMismatch: return "ArityMismatch";
    case ErrorCode::kUnknownFamily: return "UnknownFamily";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kMalformedPayload: return "MalformedPayload";
    case ErrorCode::kDegenerateShard: return "DegenerateShard";
    case ErrorCode::kDecodeFailure: return "DecodeFailure";
    case ErrorCode::kReportCountMismatch: return "ReportCountMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kStaleRound: return "StaleRound";
    case ErrorCode::kFrameTooLarge: return "FrameTooLarge";
    case ErrorCode::kConnectionClosed: return "ConnectionClosed";
    case ErrorCode::kMalformedFrame: return "MalformedFrame";
    case ErrorCode::kAggregatorGone: return "AggregatorGone";
    case ErrorCode::kCollaboratorDropped: return "CollaboratorDropped";
    case ErrorCode::kDuplicateHello: return "DuplicateHello";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kUnknownKey: return "UnknownKey";
    case ErrorCode::kBadTaskOrder: return "BadTaskOrder";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kBadValue: return "BadValue";
    case ErrorCode::kNonNumericFeature: return "NonNumericFeature";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kRaggedRow: return "RaggedRow";
    case ErrorCode::kTooManyParts: return "TooManyParts";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what, ErrorLocation where)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), what)),
      code_(code),
      where_(where) {}

bool Error::is_config_error() const noexcept {
  switch (code_) {
    case ErrorCode::kUnknownKey:
    case ErrorCode::kBadTaskOrder:
    case ErrorCode::kMissingField:
    case ErrorCode::kBadValue:
    case ErrorCode::kUnknownFamily:
    case ErrorCode::kNonNumericFeature:
    case ErrorCode::kEmptyFile:
    case ErrorCode::kRaggedRow:
    case ErrorCode::kTooManyParts:
    case ErrorCode::kIoError:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kLabelOutOfRange:
    case ErrorCode::kNonFiniteFeature:
    case ErrorCode::kInvalidArgument:
      return true;
    default:
      return false;
  }
}

}  // namespace fedboost
