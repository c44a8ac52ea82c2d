#include "tcfaudit/error.hpp"

namespace tcfaudit {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedBase64: return "MalformedBase64";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kNonCanonicalPadding: return "NonCanonicalPadding";
    case ErrorCode::kInvalidRangeEntry: return "InvalidRangeEntry";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kNoAnnotations: return "NoAnnotations";
    case ErrorCode::kMissingPhase: return "MissingPhase";
    case ErrorCode::kInconsistentInputs: return "InconsistentInputs";
    case ErrorCode::kInvalidPlan: return "InvalidPlan";
    case ErrorCode::kMalformedRankLine: return "MalformedRankLine";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kNetworkError: return "NetworkError";
  }
  return "Unknown";
}

}  // namespace tcfaudit
