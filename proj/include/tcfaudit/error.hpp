#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tcfaudit {

// Every failure raised by the core library carries one of these codes. The C
// API maps them one-to-one onto tcfa_status values.
enum class ErrorCode {
  kInvalidArgument = 1,
  // Consent codec.
  kMalformedBase64,
  kTruncatedPayload,
  kUnsupportedVersion,
  kNonCanonicalPadding,
  kInvalidRangeEntry,
  kInvariantViolation,
  // Input documents.
  kSchemaError,
  kDuplicateId,
  kNoAnnotations,
  kMissingPhase,
  kInconsistentInputs,
  kInvalidPlan,
  kMalformedRankLine,
  // Environment.
  kIoError,
  kNetworkError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tcfaudit
