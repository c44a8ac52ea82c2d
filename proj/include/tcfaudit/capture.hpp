#pragma once

// Audit-session captures: one JSON object per line, one line per visited
// website. The same schema is written by crawlers, the simulator and the
// browser inspector.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tcfaudit {

enum class Channel {
  kCmpFunction,            // direct __cmp() call from a first-party script
  kCmpLocatorPostMessage,  // __cmpCall postMessage to the __cmpLocator frame
  kSharedCookie,           // euconsent cookie on .consensu.org
  kUrlGet,                 // gdpr_consent in a GET request
  kUrlPost,                // gdpr_consent in a POST body
};

// Standard APIs and the shared cookie, as opposed to URL-based sharing.
inline bool IsApiChannel(Channel c) {
  return c == Channel::kCmpFunction || c == Channel::kCmpLocatorPostMessage ||
         c == Channel::kSharedCookie;
}
inline bool IsUrlChannel(Channel c) {
  return c == Channel::kUrlGet || c == Channel::kUrlPost;
}

enum class Phase { kNoAction, kAfterRefuse, kAfterAccept };
inline constexpr Phase kAllPhases[] = {Phase::kNoAction, Phase::kAfterRefuse,
                                       Phase::kAfterAccept};

enum class HttpMethod { kGet, kPost };
enum class BannerState { kPresent, kAbsent, kBroken };

std::string_view ChannelName(Channel c);
std::string_view PhaseName(Phase p);
std::string_view HttpMethodName(HttpMethod m);
std::string_view BannerStateName(BannerState s);
std::optional<Channel> ParseChannel(std::string_view s);
std::optional<Phase> ParsePhase(std::string_view s);
std::optional<HttpMethod> ParseHttpMethod(std::string_view s);
std::optional<BannerState> ParseBannerState(std::string_view s);

struct ConsentObservation {
  Channel channel = Channel::kCmpFunction;
  std::string raw;
  std::string page_url;
  std::optional<std::string> request_url;  // URL channels only
  std::optional<bool> gdpr_applies_param;  // the "gdpr" URL parameter
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const ConsentObservation&,
                         const ConsentObservation&) = default;
};

struct RequestLogEntry {
  std::string url;
  HttpMethod method = HttpMethod::kGet;
  bool third_party = false;
  std::optional<std::string> page_url;

  friend bool operator==(const RequestLogEntry&,
                         const RequestLogEntry&) = default;
};

struct PhaseCapture {
  std::vector<ConsentObservation> observations;
  std::vector<RequestLogEntry> requests;

  friend bool operator==(const PhaseCapture&, const PhaseCapture&) = default;
};

// One operator's manual assessment of the banner. nullopt = not assessed.
struct BannerAnnotation {
  BannerState banner_state = BannerState::kPresent;
  std::optional<bool> opt_out_possible;
  std::optional<bool> pre_selected;
  std::string operator_label;

  friend bool operator==(const BannerAnnotation&,
                         const BannerAnnotation&) = default;
};

struct SharedCookieProbe {
  std::string injected_raw;
  std::optional<std::string> returned_raw;

  friend bool operator==(const SharedCookieProbe&,
                         const SharedCookieProbe&) = default;
};

struct SessionRecord {
  std::string domain;
  std::string tld;
  std::optional<int> tranco_rank;
  bool tcf_banner_detected = false;
  // Each phase is a separate clean browser session.
  std::map<Phase, PhaseCapture> phases;
  std::vector<BannerAnnotation> annotations;
  std::optional<SharedCookieProbe> shared_cookie_probe;

  const PhaseCapture* FindPhase(Phase p) const {
    auto it = phases.find(p);
    return it == phases.end() ? nullptr : &it->second;
  }

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

struct ReconciledAnnotation {
  BannerAnnotation annotation;
  // Operators disagreed on which violations the banner exhibits.
  bool needs_review = false;
};

// Merges several operators' assessments toward the fewest violations:
//   - banner_state: Present if anyone saw it; Broken only if all did.
//   - opt_out_possible: true if any operator found a way to refuse.
//   - pre_selected: false if any operator that assessed it saw no
//     pre-selection; true only if every assessing operator saw it.
// Throws Error{kNoAnnotations}.
ReconciledAnnotation ReconcileAnnotations(const SessionRecord& record);

// Whether the record counts toward the pre-selection / non-respect
// denominator: reconciled banner Present and refusal possible.
bool RefusalPossible(const SessionRecord& record);

nlohmann::json SessionToJson(const SessionRecord& record);
// Throws Error{kSchemaError}.
SessionRecord SessionFromJson(const nlohmann::json& j);
std::string SerializeSession(const SessionRecord& record);
std::string SerializeSessions(const std::vector<SessionRecord>& records);

struct LoadIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<SessionRecord> records;
  std::vector<LoadIssue> errors;    // rejected lines
  std::vector<LoadIssue> warnings;  // kept lines with forensic notes
};

// Parses a JSON-lines capture stream. Bad lines are reported and skipped;
// throws Error{kSchemaError} only when lines were present but none was valid.
LoadResult LoadSessions(std::string_view jsonl);

}  // namespace tcfaudit
