#include "tcfaudit/engine.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <thread>

#include "json_util.hpp"
#include "tcfaudit/domain.hpp"
#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

using detail::Json;

enum class Verdict {
  kPositive,
  kBelowThreshold,
  kNoPurposes,
  kEmptyVendors,
  kLegitimateInterestOnly,
};

struct DecodedObservation {
  Phase phase;
  std::size_t index;
  const ConsentObservation* observation;
  std::optional<ConsentString> consent;
  std::string error;
};

// One record with every observation decoded once.
class RecordAnalysis {
 public:
  RecordAnalysis(const SessionRecord& record, const VendorRegistry& registry,
                 const EngineOptions& options)
      : record_(record), registry_(registry), options_(options) {
    for (const auto& [phase, capture] : record.phases) {
      for (std::size_t i = 0; i < capture.observations.size(); ++i) {
        DecodedObservation d{phase, i, &capture.observations[i], {}, {}};
        try {
          d.consent = DecodeConsent(d.observation->raw);
        } catch (const Error& e) {
          d.error = std::string(ErrorCodeName(e.code())) + ": " + e.what();
        }
        observations_.push_back(std::move(d));
      }
    }
  }

  const SessionRecord& record() const { return record_; }
  const std::vector<DecodedObservation>& observations() const {
    return observations_;
  }

  Verdict Classify(const ConsentString& c, int min_purposes) const {
    const int n = CountTcfPurposes(c);
    if (n == 0) return Verdict::kNoPurposes;
    if (c.allowed_vendors.empty()) return Verdict::kEmptyVendors;
    if (!registry_.HasConsentBasedVendor(c)) {
      return Verdict::kLegitimateInterestOnly;
    }
    return n >= min_purposes ? Verdict::kPositive : Verdict::kBelowThreshold;
  }

  // Decodable observations in `phase` whose channel passes `channel_ok` and
  // whose string is positive at `min_purposes`.
  template <typename ChannelPred>
  std::vector<const DecodedObservation*> Positive(Phase phase,
                                                  ChannelPred channel_ok,
                                                  int min_purposes) const {
    std::vector<const DecodedObservation*> out;
    for (const auto& d : observations_) {
      if (d.phase != phase || !d.consent) continue;
      if (!channel_ok(d.observation->channel)) continue;
      if (Classify(*d.consent, min_purposes) == Verdict::kPositive) {
        out.push_back(&d);
      }
    }
    return out;
  }

  ViolationFinding MakeFinding(
      FindingKind kind,
      const std::vector<const DecodedObservation*>& evidence) const {
    ViolationFinding f;
    f.kind = kind;
    f.domain = record_.domain;
    const DecodedObservation* strongest = nullptr;
    for (const DecodedObservation* d : evidence) {
      f.evidence.push_back({d->phase, d->index, d->observation->channel});
      if (!d->consent) continue;
      const int n = CountTcfPurposes(*d->consent);
      if (!strongest || n > f.purposes_count) {
        strongest = d;
        f.purposes_count = n;
      }
    }
    if (strongest) f.cmp = registry_.IdentifyCmp(strongest->consent->cmp_id);
    return f;
  }

  // The first standard-API string wins; the shared cookie is a fallback
  // since another CMP may have written it.
  std::optional<CmpIdentity> SiteCmp() const {
    for (bool cookie_pass : {false, true}) {
      for (Phase phase : kAllPhases) {
        for (const auto& d : observations_) {
          if (d.phase != phase || !d.consent) continue;
          const Channel c = d.observation->channel;
          const bool wanted = cookie_pass ? c == Channel::kSharedCookie
                                          : (c == Channel::kCmpFunction ||
                                             c == Channel::kCmpLocatorPostMessage);
          if (wanted) return registry_.IdentifyCmp(d.consent->cmp_id);
        }
      }
    }
    return std::nullopt;
  }

  std::optional<ViolationFinding> ConsentBeforeChoice() const {
    if (!record_.tcf_banner_detected) return std::nullopt;
    auto positive = Positive(Phase::kNoAction, IsApiChannel,
                             options_.before_choice_min_purposes);
    if (positive.empty()) return std::nullopt;
    return MakeFinding(FindingKind::kConsentBeforeChoice, positive);
  }

  bool NonRespectApplicable() const {
    return RefusalPossible(record_) &&
           record_.phases.contains(Phase::kAfterRefuse);
  }

  std::optional<ViolationFinding> NonRespect() const {
    if (!NonRespectApplicable()) {
      throw Error(ErrorCode::kMissingPhase,
                  record_.domain +
                      ": non-respect needs a refusal-capable banner and an "
                      "after_refuse phase");
    }
    auto positive = Positive(Phase::kAfterRefuse, IsApiChannel,
                             options_.non_respect_min_purposes);
    if (positive.empty()) return std::nullopt;
    return MakeFinding(FindingKind::kNonRespectOfChoice, positive);
  }

  std::vector<ViolationFinding> BannerViolations() const {
    if (record_.annotations.empty()) {
      throw Error(ErrorCode::kNoAnnotations,
                  record_.domain + ": no banner annotations");
    }
    const BannerAnnotation a = ReconcileAnnotations(record_).annotation;
    std::vector<ViolationFinding> out;
    if (a.banner_state != BannerState::kPresent) return out;
    auto make = [&](FindingKind kind) {
      ViolationFinding f;
      f.kind = kind;
      f.domain = record_.domain;
      f.cmp = SiteCmp();
      return f;
    };
    if (a.opt_out_possible == false) {
      out.push_back(make(FindingKind::kNoWayToOptOut));
    } else if (a.opt_out_possible == true && a.pre_selected == true) {
      out.push_back(make(FindingKind::kPreSelected));
    }
    return out;
  }

  SharedCookieResult SharedCookie() const {
    SharedCookieResult out;
    auto is_cookie = [](Channel c) { return c == Channel::kSharedCookie; };
    if (record_.tcf_banner_detected) {
      auto before = Positive(Phase::kNoAction, is_cookie,
                             options_.before_choice_min_purposes);
      if (!before.empty()) {
        out.findings.push_back(
            MakeFinding(FindingKind::kSharedCookieBeforeChoice, before));
      }
      if (NonRespectApplicable()) {
        auto after = Positive(Phase::kAfterRefuse, is_cookie,
                              options_.shared_cookie_non_respect_min_purposes);
        if (!after.empty()) {
          out.findings.push_back(
              MakeFinding(FindingKind::kSharedCookieNonRespect, after));
        }
      }
    }
    if (const auto& probe = record_.shared_cookie_probe) {
      out.reuse_marker = probe->returned_raw.has_value() &&
                         *probe->returned_raw == probe->injected_raw;
    }
    return out;
  }

  std::vector<ViolationFinding> UrlChannel(bool has_before_choice,
                                           bool has_non_respect) const {
    std::vector<ViolationFinding> out;
    if (!record_.tcf_banner_detected) return out;

    if (!has_before_choice) {
      auto url = Positive(Phase::kNoAction, IsUrlChannel,
                          options_.before_choice_min_purposes);
      if (!url.empty()) {
        out.push_back(MakeFinding(FindingKind::kUrlOnlyBeforeChoice, url));
      }
    }
    if (!has_non_respect && NonRespectApplicable()) {
      auto url = Positive(Phase::kAfterRefuse, IsUrlChannel,
                          options_.non_respect_min_purposes);
      if (!url.empty()) {
        out.push_back(MakeFinding(FindingKind::kUrlOnlyNonRespect, url));
      }
    }

    // A URL string naming a valid CMP other than one seen through the
    // standard APIs or the shared cookie.
    std::set<int> api_ids;
    for (const auto& d : observations_) {
      if (d.consent && IsApiChannel(d.observation->channel) &&
          registry_.IdentifyCmp(d.consent->cmp_id).status == CmpStatus::kKnown) {
        api_ids.insert(d.consent->cmp_id);
      }
    }
    std::vector<const DecodedObservation*> mismatched;
    for (const auto& d : observations_) {
      if (!d.consent || !IsUrlChannel(d.observation->channel)) continue;
      const int id = d.consent->cmp_id;
      if (registry_.IdentifyCmp(id).status != CmpStatus::kKnown) continue;
      if (std::any_of(api_ids.begin(), api_ids.end(),
                      [id](int a) { return a != id; })) {
        mismatched.push_back(&d);
      }
    }
    if (!mismatched.empty()) {
      ViolationFinding f = MakeFinding(FindingKind::kCmpIdMismatch, mismatched);
      f.cmp = registry_.IdentifyCmp(mismatched.front()->consent->cmp_id);
      out.push_back(std::move(f));
    }

    std::vector<const DecodedObservation*> invalid;
    for (const auto& d : observations_) {
      if (d.consent && registry_.IdentifyCmp(d.consent->cmp_id).status ==
                           CmpStatus::kInvalid) {
        invalid.push_back(&d);
      }
    }
    if (!invalid.empty()) {
      ViolationFinding f = MakeFinding(FindingKind::kInvalidCmpId, invalid);
      f.cmp = registry_.IdentifyCmp(invalid.front()->consent->cmp_id);
      out.push_back(std::move(f));
    }
    return out;
  }

  std::optional<ViolationFinding> NonexistentVendors() const {
    const int max_id = registry_.max_vendor_id();
    if (max_id == 0 || !record_.tcf_banner_detected) return std::nullopt;
    std::vector<const DecodedObservation*> evidence;
    for (const auto& d : observations_) {
      if (d.consent && ExceedsVendorList(*d.consent, max_id)) {
        evidence.push_back(&d);
      }
    }
    if (evidence.empty()) return std::nullopt;
    return MakeFinding(FindingKind::kNonexistentVendors, evidence);
  }

 private:
  const SessionRecord& record_;
  const VendorRegistry& registry_;
  const EngineOptions& options_;
  std::vector<DecodedObservation> observations_;
};

Json EvidenceToJson(const EvidenceRef& e) {
  return {{"phase", PhaseName(e.phase)},
          {"index", e.index},
          {"channel", ChannelName(e.channel)}};
}

std::optional<CmpIdentity> CmpIdentityFromJson(const Json* j,
                                               const std::string& path) {
  if (!j) return std::nullopt;
  CmpIdentity c;
  const std::string status = detail::StringField(*j, "status", path);
  auto parsed = ParseCmpStatus(status);
  if (!parsed) detail::SchemaFail(path, "unknown CMP status '" + status + "'");
  c.status = *parsed;
  c.id = static_cast<int>(detail::IntField(*j, "id", path));
  c.name = detail::OptionalString(*j, "name", path).value_or("");
  return c;
}

template <typename T>
Json OptionalToJson(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json SiteToJson(const SiteSummary& s) {
  Json trackers = Json::object();
  for (const auto& [phase, count] : s.trackers) {
    trackers[std::string(PhaseName(phase))] = {
        {"tracking_requests", count.tracking_requests},
        {"total_third_party", count.total_third_party}};
  }
  return {
      {"type", "site"},
      {"domain", s.domain},
      {"tld", s.tld},
      {"tranco_rank", OptionalToJson(s.tranco_rank)},
      {"tcf_banner_detected", s.tcf_banner_detected},
      {"annotated", s.annotated},
      {"banner_state", s.banner_state ? Json(BannerStateName(*s.banner_state))
                                      : Json(nullptr)},
      {"refusal_possible", s.refusal_possible},
      {"needs_review", s.needs_review},
      {"cmp", CmpIdentityToJson(s.cmp)},
      {"trackers", std::move(trackers)},
  };
}

SiteSummary SiteFromJson(const Json& j, const std::string& path) {
  SiteSummary s;
  s.domain = detail::StringField(j, "domain", path);
  s.tld = detail::StringField(j, "tld", path);
  if (auto rank = detail::OptionalInt(j, "tranco_rank", path)) {
    s.tranco_rank = static_cast<int>(*rank);
  }
  s.tcf_banner_detected = detail::AsBool(
      detail::Field(j, "tcf_banner_detected", path), path);
  s.annotated = detail::AsBool(detail::Field(j, "annotated", path), path);
  if (auto state = detail::OptionalString(j, "banner_state", path)) {
    s.banner_state = ParseBannerState(*state);
    if (!s.banner_state) detail::SchemaFail(path, "unknown banner_state");
  }
  s.refusal_possible =
      detail::AsBool(detail::Field(j, "refusal_possible", path), path);
  s.needs_review = detail::OptionalBool(j, "needs_review", path).value_or(false);
  s.cmp = CmpIdentityFromJson(detail::OptionalField(j, "cmp"), path + ".cmp");
  if (const Json* trackers = detail::OptionalField(j, "trackers")) {
    for (const auto& [key, value] : trackers->items()) {
      auto phase = ParsePhase(key);
      if (!phase) detail::SchemaFail(path + ".trackers", "unknown phase " + key);
      s.trackers[*phase] = {
          static_cast<int>(detail::IntField(value, "tracking_requests", path)),
          static_cast<int>(detail::IntField(value, "total_third_party", path))};
    }
  }
  return s;
}

ViolationFinding FindingFromJson(const Json& j, const std::string& path) {
  ViolationFinding f;
  const std::string kind = detail::StringField(j, "kind", path);
  auto parsed = ParseFindingKind(kind);
  if (!parsed) detail::SchemaFail(path, "unknown finding kind '" + kind + "'");
  f.kind = *parsed;
  f.domain = detail::StringField(j, "domain", path);
  f.cmp = CmpIdentityFromJson(detail::OptionalField(j, "cmp"), path + ".cmp");
  if (const Json* ev = detail::OptionalField(j, "evidence")) {
    detail::AsArray(*ev, path + ".evidence");
    for (std::size_t i = 0; i < ev->size(); ++i) {
      const std::string epath = detail::Path(path + ".evidence", i);
      EvidenceRef e;
      auto phase = ParsePhase(detail::StringField((*ev)[i], "phase", epath));
      auto channel =
          ParseChannel(detail::StringField((*ev)[i], "channel", epath));
      if (!phase || !channel) detail::SchemaFail(epath, "bad phase or channel");
      e.phase = *phase;
      e.channel = *channel;
      e.index = static_cast<std::size_t>(detail::IntField((*ev)[i], "index", epath));
      f.evidence.push_back(e);
    }
  }
  f.purposes_count =
      static_cast<int>(detail::OptionalInt(j, "purposes_count", path).value_or(0));
  return f;
}

}  // namespace

std::string_view FindingKindName(FindingKind kind) {
  switch (kind) {
    case FindingKind::kConsentBeforeChoice: return "ConsentBeforeChoice";
    case FindingKind::kNoWayToOptOut: return "NoWayToOptOut";
    case FindingKind::kPreSelected: return "PreSelected";
    case FindingKind::kNonRespectOfChoice: return "NonRespectOfChoice";
    case FindingKind::kSharedCookieBeforeChoice: return "SharedCookieBeforeChoice";
    case FindingKind::kSharedCookieNonRespect: return "SharedCookieNonRespect";
    case FindingKind::kUrlOnlyBeforeChoice: return "UrlOnlyBeforeChoice";
    case FindingKind::kUrlOnlyNonRespect: return "UrlOnlyNonRespect";
    case FindingKind::kCmpIdMismatch: return "CmpIdMismatch";
    case FindingKind::kInvalidCmpId: return "InvalidCmpId";
    case FindingKind::kNonexistentVendors: return "NonexistentVendors";
  }
  return "";
}

std::optional<FindingKind> ParseFindingKind(std::string_view name) {
  for (FindingKind k : kAllFindingKinds) {
    if (FindingKindName(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view NoteKindName(NoteKind kind) {
  switch (kind) {
    case NoteKind::kSharedCookieReuse: return "SharedCookieReuse";
    case NoteKind::kSubThresholdNonRespect: return "SubThresholdNonRespect";
    case NoteKind::kPurposesBeyondTcf: return "PurposesBeyondTcf";
    case NoteKind::kEmptyVendorsExcluded: return "EmptyVendorsExcluded";
    case NoteKind::kLegitimateInterestOnlyExcluded:
      return "LegitimateInterestOnlyExcluded";
    case NoteKind::kUndecodableObservation: return "UndecodableObservation";
    case NoteKind::kAnnotationsNeedReview: return "AnnotationsNeedReview";
  }
  return "";
}

std::optional<NoteKind> ParseNoteKind(std::string_view name) {
  for (NoteKind k :
       {NoteKind::kSharedCookieReuse, NoteKind::kSubThresholdNonRespect,
        NoteKind::kPurposesBeyondTcf, NoteKind::kEmptyVendorsExcluded,
        NoteKind::kLegitimateInterestOnlyExcluded,
        NoteKind::kUndecodableObservation, NoteKind::kAnnotationsNeedReview}) {
    if (NoteKindName(k) == name) return k;
  }
  return std::nullopt;
}

std::map<Phase, PhaseTrackerCount> CountTrackers(const SessionRecord& record,
                                                 const TrackerList& trackers) {
  std::map<Phase, PhaseTrackerCount> out;
  for (const auto& [phase, capture] : record.phases) {
    PhaseTrackerCount& count = out[phase];
    for (const RequestLogEntry& q : capture.requests) {
      const bool third_party =
          q.page_url ? IsThirdPartyUrl(q.url, HostOf(*q.page_url))
                     : q.third_party;
      if (!third_party) continue;
      ++count.total_third_party;
      if (trackers.Matches(HostOf(q.url))) ++count.tracking_requests;
    }
  }
  return out;
}

bool ExceedsVendorList(const ConsentString& consent, int max_gvl_vendor_id) {
  return !consent.allowed_vendors.empty() &&
         *consent.allowed_vendors.rbegin() > max_gvl_vendor_id;
}

ViolationEngine::ViolationEngine(const VendorRegistry& registry,
                                 EngineOptions options,
                                 const TrackerList* trackers)
    : registry_(registry), options_(options), trackers_(trackers) {}

std::optional<ViolationFinding> ViolationEngine::DetectConsentBeforeChoice(
    const SessionRecord& record) const {
  return RecordAnalysis(record, registry_, options_).ConsentBeforeChoice();
}

std::optional<ViolationFinding> ViolationEngine::DetectNonRespect(
    const SessionRecord& record) const {
  return RecordAnalysis(record, registry_, options_).NonRespect();
}

std::vector<ViolationFinding> ViolationEngine::DetectBannerViolations(
    const SessionRecord& record) const {
  return RecordAnalysis(record, registry_, options_).BannerViolations();
}

SharedCookieResult ViolationEngine::DetectSharedCookieEscalation(
    const SessionRecord& record) const {
  return RecordAnalysis(record, registry_, options_).SharedCookie();
}

std::vector<ViolationFinding> ViolationEngine::DetectUrlChannelFindings(
    const SessionRecord& record) const {
  RecordAnalysis a(record, registry_, options_);
  const bool before = a.ConsentBeforeChoice().has_value();
  const bool non_respect = a.NonRespectApplicable() && a.NonRespect();
  return a.UrlChannel(before, non_respect);
}

std::vector<ViolationFinding> ViolationEngine::DetectUrlChannelFindings(
    const std::vector<SessionRecord>& records) const {
  std::vector<ViolationFinding> out;
  for (const auto& r : records) {
    auto f = DetectUrlChannelFindings(r);
    out.insert(out.end(), std::make_move_iterator(f.begin()),
               std::make_move_iterator(f.end()));
  }
  return out;
}

std::optional<ViolationFinding> ViolationEngine::CheckNonexistentVendors(
    const SessionRecord& record) const {
  return RecordAnalysis(record, registry_, options_).NonexistentVendors();
}

SiteSummary ViolationEngine::Summarize(const SessionRecord& record) const {
  SiteSummary s;
  s.domain = record.domain;
  s.tld = record.tld;
  s.tranco_rank = record.tranco_rank;
  s.tcf_banner_detected = record.tcf_banner_detected;
  s.annotated = !record.annotations.empty();
  if (s.annotated) {
    const ReconciledAnnotation r = ReconcileAnnotations(record);
    s.banner_state = r.annotation.banner_state;
    s.refusal_possible = r.annotation.banner_state == BannerState::kPresent &&
                         r.annotation.opt_out_possible == true;
    s.needs_review = r.needs_review;
  }
  s.cmp = RecordAnalysis(record, registry_, options_).SiteCmp();
  if (trackers_) s.trackers = CountTrackers(record, *trackers_);
  return s;
}

void ViolationEngine::AuditRecord(const SessionRecord& record,
                                  AuditResult& out) const {
  out.sites.push_back(Summarize(record));
  RecordAnalysis a(record, registry_, options_);
  auto note = [&](NoteKind kind, int purposes, std::string detail) {
    out.notes.push_back({kind, record.domain, purposes, std::move(detail)});
  };

  for (const auto& d : a.observations()) {
    if (!d.consent) {
      note(NoteKind::kUndecodableObservation, 0,
           std::string(PhaseName(d.phase)) + "[" + std::to_string(d.index) +
               "] " + d.error);
    }
  }
  if (!record.tcf_banner_detected) return;

  auto before = a.ConsentBeforeChoice();
  if (before) out.findings.push_back(*before);

  if (!record.annotations.empty()) {
    for (auto& f : a.BannerViolations()) out.findings.push_back(std::move(f));
    if (out.sites.back().needs_review) {
      note(NoteKind::kAnnotationsNeedReview, 0,
           "operators disagree on the banner's violations");
    }
  }

  std::optional<ViolationFinding> non_respect;
  if (a.NonRespectApplicable()) {
    non_respect = a.NonRespect();
    if (non_respect) {
      out.findings.push_back(*non_respect);
    } else {
      int best = 0;
      for (const auto& d : a.observations()) {
        if (d.phase != Phase::kAfterRefuse || !d.consent ||
            !IsApiChannel(d.observation->channel)) {
          continue;
        }
        if (a.Classify(*d.consent, options_.non_respect_min_purposes) ==
            Verdict::kBelowThreshold) {
          best = std::max(best, CountTcfPurposes(*d.consent));
        }
      }
      if (best > 0) {
        note(NoteKind::kSubThresholdNonRespect, best,
             "positive consent below the non-respect threshold after refusal");
      }
    }
  }

  SharedCookieResult shared = a.SharedCookie();
  for (auto& f : shared.findings) out.findings.push_back(std::move(f));
  if (shared.reuse_marker) {
    note(NoteKind::kSharedCookieReuse, 0,
         "CMP returned the injected shared cookie unchanged");
  }

  for (auto& f : a.UrlChannel(before.has_value(), non_respect.has_value())) {
    out.findings.push_back(std::move(f));
  }
  if (auto f = a.NonexistentVendors()) out.findings.push_back(std::move(*f));

  // Strings removed from analysis rather than classified.
  bool empty_vendors = false;
  bool li_only = false;
  std::set<int> beyond;
  for (const auto& d : a.observations()) {
    if (!d.consent) continue;
    const auto extra = PurposesBeyondTcf(*d.consent);
    beyond.insert(extra.begin(), extra.end());
    if (d.phase == Phase::kAfterAccept) continue;
    const Verdict v = a.Classify(*d.consent, 1);
    empty_vendors |= v == Verdict::kEmptyVendors;
    li_only |= v == Verdict::kLegitimateInterestOnly;
  }
  if (empty_vendors) {
    note(NoteKind::kEmptyVendorsExcluded, 0,
         "string with purposes but no vendors left out of violation rules");
  }
  if (li_only) {
    note(NoteKind::kLegitimateInterestOnlyExcluded, 0,
         "vendors rely on legitimate interest only; left to the DPA");
  }
  if (!beyond.empty()) {
    note(NoteKind::kPurposesBeyondTcf, 0,
         "purposes " + std::to_string(*beyond.begin()) + ".." +
             std::to_string(*beyond.rbegin()) +
             " set beyond the five TCF purposes");
  }
}

AuditResult ViolationEngine::Audit(
    const std::vector<SessionRecord>& records) const {
  std::vector<AuditResult> partial(records.size());
  unsigned threads = options_.threads ? options_.threads
                                      : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(1, records.size() / 64)));

  if (threads <= 1) {
    for (std::size_t i = 0; i < records.size(); ++i) AuditRecord(records[i], partial[i]);
  } else {
    std::vector<std::jthread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < records.size(); i += threads) {
            AuditRecord(records[i], partial[i]);
          }
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  AuditResult out;
  for (auto& p : partial) {
    std::move(p.sites.begin(), p.sites.end(), std::back_inserter(out.sites));
    std::move(p.findings.begin(), p.findings.end(), std::back_inserter(out.findings));
    std::move(p.notes.begin(), p.notes.end(), std::back_inserter(out.notes));
  }
  return out;
}

nlohmann::json CmpIdentityToJson(const std::optional<CmpIdentity>& cmp) {
  if (!cmp) return nullptr;
  Json j = {{"status", CmpStatusName(cmp->status)}, {"id", cmp->id}};
  if (cmp->status == CmpStatus::kKnown) j["name"] = cmp->name;
  return j;
}

nlohmann::json FindingToJson(const ViolationFinding& f) {
  Json evidence = Json::array();
  for (const auto& e : f.evidence) evidence.push_back(EvidenceToJson(e));
  return {
      {"type", "finding"},
      {"kind", FindingKindName(f.kind)},
      {"domain", f.domain},
      {"cmp", CmpIdentityToJson(f.cmp)},
      {"evidence", std::move(evidence)},
      {"purposes_count", f.purposes_count},
  };
}

std::string SerializeAudit(const AuditResult& result) {
  std::string out;
  for (const auto& s : result.sites) out += SiteToJson(s).dump() + "\n";
  for (const auto& f : result.findings) out += FindingToJson(f).dump() + "\n";
  for (const auto& n : result.notes) {
    out += Json{{"type", "note"},
                {"note", NoteKindName(n.kind)},
                {"domain", n.domain},
                {"purposes_count", n.purposes_count},
                {"detail", n.detail}}
               .dump() +
           "\n";
  }
  return out;
}

AuditResult ParseAudit(std::string_view jsonl) {
  AuditResult out;
  std::size_t line_no = 0;
  while (!jsonl.empty()) {
    const auto nl = jsonl.find('\n');
    std::string_view line = jsonl.substr(0, nl);
    jsonl.remove_prefix(nl == std::string_view::npos ? jsonl.size() : nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string path = "line " + std::to_string(line_no);
    const Json j = detail::ParseJson(line, path);
    const std::string type = detail::StringField(j, "type", path);
    if (type == "site") {
      out.sites.push_back(SiteFromJson(j, path));
    } else if (type == "finding") {
      out.findings.push_back(FindingFromJson(j, path));
    } else if (type == "note") {
      const std::string kind = detail::StringField(j, "note", path);
      auto parsed = ParseNoteKind(kind);
      if (!parsed) detail::SchemaFail(path, "unknown note '" + kind + "'");
      out.notes.push_back(
          {*parsed, detail::StringField(j, "domain", path),
           static_cast<int>(detail::OptionalInt(j, "purposes_count", path).value_or(0)),
           detail::OptionalString(j, "detail", path).value_or("")});
    } else {
      detail::SchemaFail(path, "unknown line type '" + type + "'");
    }
  }
  return out;
}

}  // namespace tcfaudit
