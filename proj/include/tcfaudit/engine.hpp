#pragma once

// Suspected-violation detection over captured audit sessions.
//
// Positive consent means a decodable string whose TCF purposes (1..5) meet
// the rule's threshold, whose vendor list is non-empty, and which names at
// least one vendor relying on consent (not legitimate interest only) for an
// allowed purpose.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tcfaudit/capture.hpp"
#include "tcfaudit/consent.hpp"
#include "tcfaudit/registry.hpp"
#include "tcfaudit/trackers.hpp"

namespace tcfaudit {

enum class FindingKind {
  kConsentBeforeChoice,
  kNoWayToOptOut,
  kPreSelected,
  kNonRespectOfChoice,
  kSharedCookieBeforeChoice,
  kSharedCookieNonRespect,
  kUrlOnlyBeforeChoice,
  kUrlOnlyNonRespect,
  kCmpIdMismatch,
  kInvalidCmpId,
  kNonexistentVendors,
};

inline constexpr std::array<FindingKind, 11> kAllFindingKinds = {
    FindingKind::kConsentBeforeChoice,      FindingKind::kNoWayToOptOut,
    FindingKind::kPreSelected,              FindingKind::kNonRespectOfChoice,
    FindingKind::kSharedCookieBeforeChoice, FindingKind::kSharedCookieNonRespect,
    FindingKind::kUrlOnlyBeforeChoice,      FindingKind::kUrlOnlyNonRespect,
    FindingKind::kCmpIdMismatch,            FindingKind::kInvalidCmpId,
    FindingKind::kNonexistentVendors,
};

// The four headline violations counted by the any-violation statistic.
inline constexpr std::array<FindingKind, 4> kCoreFindingKinds = {
    FindingKind::kConsentBeforeChoice, FindingKind::kNoWayToOptOut,
    FindingKind::kPreSelected, FindingKind::kNonRespectOfChoice};

std::string_view FindingKindName(FindingKind kind);
std::optional<FindingKind> ParseFindingKind(std::string_view name);

struct EvidenceRef {
  Phase phase = Phase::kNoAction;
  std::size_t index = 0;  // into phases[phase].observations
  Channel channel = Channel::kCmpFunction;

  friend bool operator==(const EvidenceRef&, const EvidenceRef&) = default;
};

struct ViolationFinding {
  FindingKind kind = FindingKind::kConsentBeforeChoice;
  std::string domain;
  // CMP of the evidence string; for banner findings, the site's CMP. Empty
  // when no consent string identifies one.
  std::optional<CmpIdentity> cmp;
  // Empty only for the annotation-based kinds.
  std::vector<EvidenceRef> evidence;
  int purposes_count = 0;  // TCF purposes (0..5) in the strongest evidence

  friend bool operator==(const ViolationFinding&,
                         const ViolationFinding&) = default;
};

// Non-violation observations the audit surfaces alongside findings.
enum class NoteKind {
  kSharedCookieReuse,              // CMP returned the injected cookie verbatim
  kSubThresholdNonRespect,         // 1..4 purposes after refusal
  kPurposesBeyondTcf,              // purposes above 5 set in a string
  kEmptyVendorsExcluded,           // purposes set, no vendors
  kLegitimateInterestOnlyExcluded,
  kUndecodableObservation,
  kAnnotationsNeedReview,
};

std::string_view NoteKindName(NoteKind kind);
std::optional<NoteKind> ParseNoteKind(std::string_view name);

struct AuditNote {
  NoteKind kind = NoteKind::kSharedCookieReuse;
  std::string domain;
  int purposes_count = 0;
  std::string detail;

  friend bool operator==(const AuditNote&, const AuditNote&) = default;
};

struct PhaseTrackerCount {
  int tracking_requests = 0;
  int total_third_party = 0;

  friend bool operator==(const PhaseTrackerCount&,
                         const PhaseTrackerCount&) = default;
};

// Per-site facts the report needs besides findings: denominators, CMP
// attribution, ranks and tracker counts.
struct SiteSummary {
  std::string domain;
  std::string tld;
  std::optional<int> tranco_rank;
  bool tcf_banner_detected = false;
  bool annotated = false;
  std::optional<BannerState> banner_state;  // reconciled
  bool refusal_possible = false;
  bool needs_review = false;
  std::optional<CmpIdentity> cmp;  // from standard-API / shared-cookie strings
  std::map<Phase, PhaseTrackerCount> trackers;

  friend bool operator==(const SiteSummary&, const SiteSummary&) = default;
};

struct AuditResult {
  std::vector<SiteSummary> sites;
  std::vector<ViolationFinding> findings;
  std::vector<AuditNote> notes;

  friend bool operator==(const AuditResult&, const AuditResult&) = default;
};

struct EngineOptions {
  int before_choice_min_purposes = 1;
  int non_respect_min_purposes = 5;
  // A refusal that still writes any positive consent into the cookie shared
  // across CMPs escalates to every TCF site.
  int shared_cookie_non_respect_min_purposes = 1;
  // Worker threads for Audit(); 0 = hardware concurrency.
  unsigned threads = 0;
};

struct SharedCookieResult {
  std::vector<ViolationFinding> findings;
  bool reuse_marker = false;
};

// Per-phase counts of third-party requests and of those hitting trackers.
std::map<Phase, PhaseTrackerCount> CountTrackers(const SessionRecord& record,
                                                 const TrackerList& trackers);

// Whether any allowed vendor id lies beyond the highest GVL id.
bool ExceedsVendorList(const ConsentString& consent, int max_gvl_vendor_id);

class ViolationEngine {
 public:
  explicit ViolationEngine(const VendorRegistry& registry,
                           EngineOptions options = {},
                           const TrackerList* trackers = nullptr);

  std::optional<ViolationFinding> DetectConsentBeforeChoice(
      const SessionRecord& record) const;
  // Throws Error{kMissingPhase} unless refusal is possible and recorded.
  std::optional<ViolationFinding> DetectNonRespect(
      const SessionRecord& record) const;
  // Throws Error{kNoAnnotations}.
  std::vector<ViolationFinding> DetectBannerViolations(
      const SessionRecord& record) const;
  SharedCookieResult DetectSharedCookieEscalation(
      const SessionRecord& record) const;
  std::vector<ViolationFinding> DetectUrlChannelFindings(
      const SessionRecord& record) const;
  std::vector<ViolationFinding> DetectUrlChannelFindings(
      const std::vector<SessionRecord>& records) const;
  std::optional<ViolationFinding> CheckNonexistentVendors(
      const SessionRecord& record) const;

  SiteSummary Summarize(const SessionRecord& record) const;

  // All detectors over all records; output order follows input order.
  AuditResult Audit(const std::vector<SessionRecord>& records) const;

 private:
  void AuditRecord(const SessionRecord& record, AuditResult& out) const;

  const VendorRegistry& registry_;
  EngineOptions options_;
  const TrackerList* trackers_;
};

// Audit files are JSON lines tagged by "type": "site", "finding" or "note".
std::string SerializeAudit(const AuditResult& result);
// Throws Error{kSchemaError}.
AuditResult ParseAudit(std::string_view jsonl);

nlohmann::json FindingToJson(const ViolationFinding& finding);
nlohmann::json CmpIdentityToJson(const std::optional<CmpIdentity>& cmp);

}  // namespace tcfaudit
