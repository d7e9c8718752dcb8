#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fedboost {

enum class ErrorCode {
  // core
  kShapeMismatch,
  kLabelOutOfRange,
  kNonFiniteFeature,
  kInvalidArgument,
  kEmptyEnsemble,
  kArityMismatch,
  // learners
  kUnknownFamily,
  kVersionUnsupported,
  kMalformedPayload,
  kDegenerateShard,
  // boosting
  kDecodeFailure,
  kReportCountMismatch,
  kLengthMismatch,
  kStaleRound,
  // protocol
  kFrameTooLarge,
  kConnectionClosed,
  kMalformedFrame,
  kAggregatorGone,
  kCollaboratorDropped,
  kDuplicateHello,
  kProtocolViolation,
  // orchestrator
  kUnknownKey,
  kBadTaskOrder,
  kMissingField,
  kBadValue,
  kNonNumericFeature,
  kEmptyFile,
  kRaggedRow,
  kTooManyParts,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Row/column (or index) an error refers to, when it refers to one.
struct ErrorLocation {
  std::optional<std::size_t> row;
  std::optional<std::size_t> col;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, ErrorLocation where = {});

  ErrorCode code() const noexcept { return code_; }
  const ErrorLocation& where() const noexcept { return where_; }

  /// True for plan/CLI input problems (exit status 2); everything else is a
  /// federation/runtime failure (exit status 3).
  bool is_config_error() const noexcept;

 private:
  ErrorCode code_;
  ErrorLocation where_;
};

}  // namespace fedboost
