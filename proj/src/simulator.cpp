#include "tcfaudit/simulator.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "json_util.hpp"
#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

using detail::Json;

constexpr std::int64_t kBaseMillis = 1569888000000;  // 2019-10-01T00:00:00Z
constexpr int kFullPurposes = 5;

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so the bounded draws are done by hand.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}

  int Uniform(int lo, int hi) {
    if (hi <= lo) return lo;
    const std::uint64_t range = static_cast<std::uint64_t>(hi) - lo + 1;
    const std::uint64_t threshold = (0 - range) % range;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v < threshold);
    return lo + static_cast<int>(v % range);
  }

  double Real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool Chance(double p) { return Real() < p; }

  template <typename T>
  const T& Pick(const std::vector<T>& items) {
    return items[Uniform(0, static_cast<int>(items.size()) - 1)];
  }

 private:
  std::mt19937_64 engine_;
};

SimRng SiteRng(std::uint64_t seed, std::size_t index, std::uint64_t stream) {
  return SimRng(SplitMix(SplitMix(seed ^ (stream << 56)) + index));
}

[[noreturn]] void PlanFail(const std::string& message) {
  throw Error(ErrorCode::kInvalidPlan, message);
}

std::vector<int> KnownCmpIds(const VendorRegistry& registry) {
  std::vector<int> ids;
  for (const auto& [id, cmp] : registry.cmps()) {
    if (registry.IdentifyCmp(id).status == CmpStatus::kKnown) ids.push_back(id);
  }
  return ids;
}

std::vector<int> InvalidCmpIds(const VendorRegistry& registry) {
  const auto& ids = registry.options().invalid_cmp_ids;
  return {ids.begin(), ids.end()};
}

bool RefusalPossible(const SiteSpec& s) {
  return s.tcf && s.annotated && s.banner_state == BannerState::kPresent &&
         s.opt_out_possible;
}

bool HasAcceptPhase(const SiteSpec& s) {
  return s.tcf && s.annotated && s.banner_state == BannerState::kPresent;
}

bool HasBeforeApiString(const SiteSpec& s) {
  return s.tcf && (s.api_before_choice || s.before_purposes > 0 ||
                   s.nonexistent_vendors || s.purposes_beyond_tcf);
}

bool HasBeforeUrlString(const SiteSpec& s) {
  return s.tcf && (s.url_before_purposes > 0 || s.url_cmp_id.has_value());
}

bool HasRefuseUrlString(const SiteSpec& s) {
  return RefusalPossible(s) && s.url_refuse_purposes > 0;
}

// Whether the site writes any standard-API or shared-cookie string.
bool HasApiString(const SiteSpec& s) {
  return HasBeforeApiString(s) || s.decoy != Decoy::kNone ||
         s.cookie_before_purposes > 0 || RefusalPossible(s) || HasAcceptPhase(s);
}

void Validate(const SiteSpec& s, const VendorRegistry& registry) {
  const std::string who = s.domain.empty() ? "site" : s.domain;
  for (int n : {s.before_purposes, s.refuse_purposes, s.cookie_before_purposes,
                s.cookie_refuse_purposes, s.url_before_purposes,
                s.url_refuse_purposes}) {
    if (n < 0 || n > kFullPurposes) PlanFail(who + ": purpose counts lie in 0..5");
  }
  if (!s.tcf) {
    const bool injected =
        s.before_purposes || s.refuse_purposes || s.cookie_before_purposes ||
        s.cookie_refuse_purposes || s.url_before_purposes ||
        s.url_refuse_purposes || s.url_cmp_id || s.invalid_cmp_id ||
        s.nonexistent_vendors || s.decoy != Decoy::kNone ||
        s.shared_cookie_reuse || s.purposes_beyond_tcf;
    if (injected) PlanFail(who + ": consent strings need a TCF site");
    return;
  }
  if (!RefusalPossible(s) &&
      (s.refuse_purposes || s.cookie_refuse_purposes || s.url_refuse_purposes)) {
    PlanFail(who + ": post-refusal strings need a banner that allows refusal");
  }
  if (s.operator_conflict && !s.annotated) {
    PlanFail(who + ": operator conflicts need an annotated site");
  }
  for (const auto& id : {s.cmp_id, s.url_cmp_id}) {
    if (id && (*id < 0 || *id > 0xFFF)) PlanFail(who + ": CMP ids are 12-bit");
  }
  if (s.invalid_cmp_id &&
      registry.IdentifyCmp(*s.invalid_cmp_id).status != CmpStatus::kInvalid) {
    PlanFail(who + ": invalid_cmp_id " + std::to_string(*s.invalid_cmp_id) +
             " is not an invalid CMP id");
  }
  if (s.nonexistent_vendors && registry.max_vendor_id() == 0) {
    PlanFail(who + ": nonexistent vendors need a vendor list");
  }
  for (const auto& [phase, count] : s.trackers) {
    if (count.tracking_requests < 0 ||
        count.total_third_party < count.tracking_requests) {
      PlanFail(who + ": tracker counts must satisfy 0 <= tracking <= total");
    }
  }
}

// The oracle: which findings and notes a spec must produce, restated from
// the detection rules without reference to the engine.
void Expect(const SiteSpec& s, const VendorRegistry& registry,
            SimulationManifest& m) {
  if (!s.tcf) return;
  auto finding = [&](FindingKind k) { m.findings.push_back({s.domain, k}); };
  auto note = [&](NoteKind k) { m.notes.push_back({s.domain, k}); };

  const bool refusal = RefusalPossible(s);
  const bool before = s.before_purposes >= 1 || s.cookie_before_purposes >= 1;
  const bool non_respect = refusal && (s.refuse_purposes >= kFullPurposes ||
                                       s.cookie_refuse_purposes >= kFullPurposes);
  const bool present = s.annotated && s.banner_state == BannerState::kPresent;

  if (before) finding(FindingKind::kConsentBeforeChoice);
  if (present && !s.opt_out_possible) finding(FindingKind::kNoWayToOptOut);
  if (refusal && s.pre_selected) finding(FindingKind::kPreSelected);
  if (non_respect) finding(FindingKind::kNonRespectOfChoice);
  if (s.cookie_before_purposes >= 1) {
    finding(FindingKind::kSharedCookieBeforeChoice);
  }
  if (refusal && s.cookie_refuse_purposes >= 1) {
    finding(FindingKind::kSharedCookieNonRespect);
  }
  if (s.url_before_purposes >= 1 && !before) {
    finding(FindingKind::kUrlOnlyBeforeChoice);
  }
  if (refusal && s.url_refuse_purposes >= kFullPurposes && !non_respect) {
    finding(FindingKind::kUrlOnlyNonRespect);
  }

  const int site_id = *s.cmp_id;
  const int url_id = s.url_cmp_id.value_or(site_id);
  const bool url_strings = HasBeforeUrlString(s) || HasRefuseUrlString(s);
  auto status = [&](int id) { return registry.IdentifyCmp(id).status; };
  if (url_strings && HasApiString(s) && url_id != site_id &&
      status(url_id) == CmpStatus::kKnown && status(site_id) == CmpStatus::kKnown) {
    finding(FindingKind::kCmpIdMismatch);
  }
  if (s.invalid_cmp_id ||
      (HasApiString(s) && status(site_id) == CmpStatus::kInvalid) ||
      (url_strings && status(url_id) == CmpStatus::kInvalid)) {
    finding(FindingKind::kInvalidCmpId);
  }
  if (s.nonexistent_vendors) finding(FindingKind::kNonexistentVendors);

  if (s.operator_conflict && refusal) note(NoteKind::kAnnotationsNeedReview);
  if (refusal && !non_respect &&
      (s.refuse_purposes >= 1 || s.cookie_refuse_purposes >= 1)) {
    note(NoteKind::kSubThresholdNonRespect);
  }
  if (s.shared_cookie_reuse) note(NoteKind::kSharedCookieReuse);
  if (s.decoy == Decoy::kEmptyVendors) note(NoteKind::kEmptyVendorsExcluded);
  if (s.decoy == Decoy::kLegitimateInterestOnly) {
    note(NoteKind::kLegitimateInterestOnlyExcluded);
  }
  if (s.purposes_beyond_tcf) note(NoteKind::kPurposesBeyondTcf);
}

// Builds the records of one site.
class SiteBuilder {
 public:
  SiteBuilder(const SiteSpec& spec, std::size_t index, std::uint64_t seed,
              const VendorRegistry& registry, const std::vector<std::string>& trackers,
              const TrackerList* tracker_list)
      : s_(spec),
        index_(index),
        rng_(SiteRng(seed, index, 2)),
        registry_(registry),
        tracker_domains_(trackers),
        tracker_list_(tracker_list) {
    for (const auto& [id, v] : registry.vendors()) {
      all_vendors_.insert(id);
      if (v.consent_purposes.empty()) li_only_vendors_.push_back(id);
    }
  }

  SessionRecord Build() {
    SessionRecord r;
    r.domain = s_.domain;
    r.tld = s_.tld;
    r.tranco_rank = s_.tranco_rank;
    r.tcf_banner_detected = s_.tcf;
    page_url_ = "https://www." + s_.domain + "/";

    PhaseCapture& before = r.phases[Phase::kNoAction];
    if (HasBeforeApiString(s_)) {
      std::set<int> purposes = PickPurposes(s_.before_purposes);
      std::set<int> vendors = VendorsFor(purposes, s_.before_purposes);
      if (s_.purposes_beyond_tcf) {
        const int top = rng_.Uniform(6, 24);
        for (int p = 6; p <= top; ++p) purposes.insert(p);
      }
      if (s_.nonexistent_vendors) {
        const int max_id = registry_.max_vendor_id();
        const int extra = rng_.Uniform(1, 20);
        for (int v = max_id + 1; v <= max_id + extra; ++v) vendors.insert(v);
      }
      Observe(before, ApiChannel(), *s_.cmp_id, purposes, vendors, 0);
    }
    if (s_.decoy != Decoy::kNone) {
      std::set<int> vendors;
      if (s_.decoy == Decoy::kLegitimateInterestOnly) {
        if (li_only_vendors_.empty()) {
          PlanFail(s_.domain + ": the vendor list has no legitimate-interest-only vendor");
        }
        const int n = rng_.Uniform(1, std::min<int>(5, li_only_vendors_.size()));
        for (int i = 0; i < n; ++i) vendors.insert(rng_.Pick(li_only_vendors_));
      }
      Observe(before, Channel::kCmpFunction, *s_.cmp_id, PickPurposes(kFullPurposes),
              vendors, 1);
    }
    if (s_.cookie_before_purposes > 0) {
      ObservePurposes(before, Channel::kSharedCookie, *s_.cmp_id,
                      s_.cookie_before_purposes, 2);
    }
    const int url_id = s_.url_cmp_id.value_or(s_.cmp_id.value_or(0));
    if (HasBeforeUrlString(s_)) {
      ObservePurposes(before, UrlChannel(), url_id, s_.url_before_purposes, 3);
    }
    if (s_.tcf && s_.invalid_cmp_id) {
      Observe(before, UrlChannel(), *s_.invalid_cmp_id, {}, {}, 4);
    }
    Requests(before, Phase::kNoAction);

    if (RefusalPossible(s_)) {
      PhaseCapture& refuse = r.phases[Phase::kAfterRefuse];
      ObservePurposes(refuse, ApiChannel(), *s_.cmp_id, s_.refuse_purposes, 10);
      if (s_.cookie_refuse_purposes > 0) {
        ObservePurposes(refuse, Channel::kSharedCookie, *s_.cmp_id,
                        s_.cookie_refuse_purposes, 11);
      }
      if (HasRefuseUrlString(s_)) {
        ObservePurposes(refuse, UrlChannel(), url_id, s_.url_refuse_purposes, 12);
      }
      Requests(refuse, Phase::kAfterRefuse);
    }
    if (HasAcceptPhase(s_)) {
      PhaseCapture& accept = r.phases[Phase::kAfterAccept];
      std::set<int> vendors = all_vendors_;
      const std::set<int> purposes = PickPurposes(kFullPurposes);
      if (vendors.empty()) vendors = VendorsFor(purposes, kFullPurposes);
      Observe(accept, ApiChannel(), *s_.cmp_id, purposes, vendors, 20);
      Requests(accept, Phase::kAfterAccept);
    }

    if (s_.tcf && s_.annotated) Annotate(r);

    if (s_.tcf && s_.shared_cookie_reuse) {
      const std::string injected = Encode(*s_.cmp_id, PickPurposes(kFullPurposes),
                                          VendorsFor(PickPurposes(kFullPurposes),
                                                     kFullPurposes),
                                          30);
      r.shared_cookie_probe = SharedCookieProbe{injected, injected};
    } else if (s_.tcf && rng_.Chance(0.25)) {
      const auto purposes = PickPurposes(kFullPurposes);
      SharedCookieProbe probe;
      probe.injected_raw = Encode(*s_.cmp_id, purposes, {}, 30);
      probe.returned_raw = Encode(*s_.cmp_id, purposes, {}, 31);
      r.shared_cookie_probe = std::move(probe);
    }
    return r;
  }

 private:
  Channel ApiChannel() {
    return rng_.Chance(0.5) ? Channel::kCmpFunction
                            : Channel::kCmpLocatorPostMessage;
  }
  Channel UrlChannel() {
    return rng_.Chance(0.8) ? Channel::kUrlGet : Channel::kUrlPost;
  }

  std::set<int> PickPurposes(int n) {
    std::vector<int> pool{1, 2, 3, 4, 5};
    for (int i = 0; i < n; ++i) {
      std::swap(pool[i], pool[rng_.Uniform(i, kFullPurposes - 1)]);
    }
    return {pool.begin(), pool.begin() + n};
  }

  // A non-empty vendor set with at least one consent-based vendor for the
  // purposes, or nothing when no purpose is set.
  std::set<int> VendorsFor(const std::set<int>& purposes, int tcf_purposes) {
    if (tcf_purposes == 0) return {};
    std::vector<int> candidates;
    for (const auto& [id, v] : registry_.vendors()) {
      if (std::any_of(purposes.begin(), purposes.end(),
                      [&](int p) { return v.consent_purposes.contains(p); })) {
        candidates.push_back(id);
      }
    }
    if (candidates.empty()) {
      if (!registry_.vendors().empty()) {
        PlanFail("the vendor list has no consent-based vendor for the purposes");
      }
      // Without a vendor list every vendor counts as consent-based.
      return {rng_.Uniform(1, 40)};
    }
    std::set<int> out;
    const int n = rng_.Uniform(1, std::min<int>(40, candidates.size()));
    for (int i = 0; i < n; ++i) out.insert(rng_.Pick(candidates));
    return out;
  }

  std::string Encode(int cmp_id, const std::set<int>& purposes,
                     const std::set<int>& vendors, int slot) {
    ConsentString c;
    const std::int64_t ds = kBaseMillis / 100 + static_cast<std::int64_t>(index_) * 6000 +
                            slot * 50 + rng_.Uniform(0, 40);
    c.created = ds - rng_.Uniform(0, 3) * 10;
    c.last_updated = ds;
    c.cmp_id = cmp_id;
    c.cmp_version = rng_.Uniform(1, 30);
    c.consent_screen = rng_.Uniform(1, 5);
    c.consent_language = Language();
    c.vendor_list_version = std::clamp(registry_.gvl_version().value_or(1), 0, 0xFFF);
    c.allowed_purposes = purposes;
    c.allowed_vendors = vendors;
    c.max_vendor_id = std::max(registry_.max_vendor_id(),
                               vendors.empty() ? 0 : *vendors.rbegin());
    return EncodeConsent(c);
  }

  std::string Language() const {
    if (s_.tld.size() == 2 && s_.tld != "uk" && s_.tld != "eu" &&
        std::all_of(s_.tld.begin(), s_.tld.end(),
                    [](char ch) { return ch >= 'a' && ch <= 'z'; })) {
      return {static_cast<char>(s_.tld[0] - 'a' + 'A'),
              static_cast<char>(s_.tld[1] - 'a' + 'A')};
    }
    return "EN";
  }

  void Observe(PhaseCapture& capture, Channel channel, int cmp_id,
               const std::set<int>& purposes, const std::set<int>& vendors,
               int slot) {
    ConsentObservation o;
    o.channel = channel;
    o.raw = Encode(cmp_id, purposes, vendors, slot);
    o.page_url = page_url_;
    o.timestamp_ms = kBaseMillis + static_cast<std::int64_t>(index_) * 600000 +
                     slot * 5000 + rng_.Uniform(0, 4999);
    if (IsUrlChannel(channel)) {
      o.request_url = "https://sync.adx" + std::to_string(rng_.Uniform(1, 9)) +
                      ".example/px?gdpr=1&gdpr_consent=" + o.raw;
      o.gdpr_applies_param = true;
    }
    capture.observations.push_back(std::move(o));
  }

  void ObservePurposes(PhaseCapture& capture, Channel channel, int cmp_id,
                       int tcf_purposes, int slot) {
    const auto purposes = PickPurposes(tcf_purposes);
    Observe(capture, channel, cmp_id, purposes, VendorsFor(purposes, tcf_purposes),
            slot);
  }

  void Requests(PhaseCapture& capture, Phase phase) {
    capture.requests.push_back(
        {page_url_ + "assets/app.js", HttpMethod::kGet, false, page_url_});
    capture.requests.push_back(
        {page_url_ + "api/config", HttpMethod::kPost, false, page_url_});
    auto it = s_.trackers.find(phase);
    if (it == s_.trackers.end()) return;
    const PhaseTrackerCount& count = it->second;
    if (count.tracking_requests > 0 && tracker_domains_.empty()) {
      PlanFail(s_.domain + ": tracking requests need a tracker list");
    }
    for (int k = 0; k < count.tracking_requests; ++k) {
      const std::string host =
          "px" + std::to_string(k) + "." + rng_.Pick(tracker_domains_);
      capture.requests.push_back({"https://" + host + "/collect?id=" + std::to_string(k),
                                  HttpMethod::kGet, true, page_url_});
    }
    for (int k = 0; k < count.total_third_party - count.tracking_requests; ++k) {
      std::string host;
      do {
        host = "static" + std::to_string(k) + ".cdn" +
               std::to_string(rng_.Uniform(0, 49)) + "-content.net";
      } while (tracker_list_ && tracker_list_->Matches(host));
      capture.requests.push_back(
          {"https://" + host + "/lib.js", HttpMethod::kGet, true, page_url_});
    }
  }

  void Annotate(SessionRecord& r) {
    BannerAnnotation a;
    a.banner_state = s_.banner_state;
    a.operator_label = "op1";
    const bool present = s_.banner_state == BannerState::kPresent;
    if (present) {
      a.opt_out_possible = s_.opt_out_possible;
      if (s_.opt_out_possible) a.pre_selected = s_.pre_selected;
    }
    r.annotations.push_back(a);
    if (!s_.operator_conflict) return;

    // A second opinion that reconciles back to the first.
    BannerAnnotation b;
    b.operator_label = "op2";
    if (present && s_.opt_out_possible) {
      b.banner_state = BannerState::kPresent;
      b.opt_out_possible = false;
      if (s_.pre_selected) b.pre_selected = true;
    } else if (present) {
      b.banner_state = BannerState::kAbsent;
    } else {
      b.banner_state = BannerState::kBroken;
    }
    r.annotations.push_back(b);
  }

  const SiteSpec& s_;
  std::size_t index_;
  SimRng rng_;
  const VendorRegistry& registry_;
  const std::vector<std::string>& tracker_domains_;
  const TrackerList* tracker_list_;
  std::set<int> all_vendors_;
  std::vector<int> li_only_vendors_;
  std::string page_url_;
};

void FillDefaults(SiteSpec& s, std::size_t index, std::uint64_t seed,
                  const VendorRegistry& registry) {
  if (s.tld.empty()) s.tld = "fr";
  if (s.domain.empty()) s.domain = "site" + std::to_string(index) + "." + s.tld;
  if (!s.tranco_rank) s.tranco_rank = static_cast<int>(index) + 1;
  if (!s.tcf) s.annotated = false;
  if (!s.cmp_id) {
    const std::vector<int> known = KnownCmpIds(registry);
    SimRng rng = SiteRng(seed, index, 3);
    s.cmp_id = known.empty() ? rng.Uniform(2, 300) : rng.Pick(known);
  }
}

SiteSpec DrawSite(const SimulationPlan& plan, std::size_t index,
                  const VendorRegistry& registry) {
  SimRng rng = SiteRng(plan.seed, index, 1);
  const SimulationRates& p = plan.rates;
  SiteSpec s;
  s.tld = plan.tlds.empty() ? "fr" : rng.Pick(plan.tlds);
  s.domain = "site" + std::to_string(index) + "." + s.tld;
  s.tranco_rank = static_cast<int>(index) * 5 + 1 + rng.Uniform(0, 4);

  auto trackers_for = [&](Phase phase) {
    auto it = plan.tracker_ranges.find(phase);
    if (it == plan.tracker_ranges.end()) return;
    const TrackerRange& t = it->second;
    PhaseTrackerCount c;
    c.tracking_requests = rng.Uniform(t.tracking_min, t.tracking_max);
    c.total_third_party = c.tracking_requests + rng.Uniform(t.other_min, t.other_max);
    s.trackers[phase] = c;
  };

  s.tcf = rng.Chance(p.tcf);
  if (!s.tcf) {
    s.annotated = false;
    s.api_before_choice = false;
    trackers_for(Phase::kNoAction);
    return s;
  }
  s.annotated = rng.Chance(p.annotated);
  if (s.annotated) {
    const double u = rng.Real();
    s.banner_state = u < p.broken            ? BannerState::kBroken
                     : u < p.broken + p.absent ? BannerState::kAbsent
                                               : BannerState::kPresent;
    if (s.banner_state == BannerState::kPresent) {
      s.opt_out_possible = !rng.Chance(p.no_opt_out);
      s.pre_selected = s.opt_out_possible && rng.Chance(p.pre_selected);
    }
    s.operator_conflict = rng.Chance(p.operator_conflict);
  }

  const std::vector<int> known = KnownCmpIds(registry);
  s.cmp_id = known.empty() ? rng.Uniform(2, 300) : rng.Pick(known);
  s.api_before_choice = rng.Chance(p.api_before_choice);
  if (rng.Chance(p.before_choice)) s.before_purposes = rng.Uniform(1, 5);

  const bool refusal = RefusalPossible(s);
  if (refusal) {
    if (rng.Chance(p.non_respect)) {
      s.refuse_purposes = kFullPurposes;
    } else if (rng.Chance(p.sub_threshold_non_respect)) {
      s.refuse_purposes = rng.Uniform(1, 4);
    }
  }
  if (rng.Chance(p.shared_cookie_before_choice)) {
    s.cookie_before_purposes = rng.Uniform(1, 5);
  }
  if (refusal && rng.Chance(p.shared_cookie_non_respect)) {
    s.cookie_refuse_purposes = rng.Uniform(1, 5);
  }
  if (rng.Chance(p.url_only_before_choice)) s.url_before_purposes = rng.Uniform(1, 5);
  if (refusal && rng.Chance(p.url_only_non_respect)) {
    s.url_refuse_purposes = kFullPurposes;
  }
  if (known.size() >= 2 && rng.Chance(p.cmp_id_mismatch)) {
    int other;
    do {
      other = rng.Pick(known);
    } while (other == *s.cmp_id);
    s.url_cmp_id = other;
  }
  const std::vector<int> invalid = InvalidCmpIds(registry);
  if (!invalid.empty() && rng.Chance(p.invalid_cmp_id)) {
    s.invalid_cmp_id = rng.Pick(invalid);
  }
  s.nonexistent_vendors =
      registry.max_vendor_id() > 0 && rng.Chance(p.nonexistent_vendors);
  if (rng.Chance(p.empty_vendors_decoy)) {
    s.decoy = Decoy::kEmptyVendors;
  } else if (rng.Chance(p.legitimate_interest_decoy)) {
    s.decoy = Decoy::kLegitimateInterestOnly;
  }
  s.shared_cookie_reuse = rng.Chance(p.shared_cookie_reuse);
  s.purposes_beyond_tcf = rng.Chance(p.purposes_beyond_tcf);

  trackers_for(Phase::kNoAction);
  if (refusal) trackers_for(Phase::kAfterRefuse);
  if (HasAcceptPhase(s)) trackers_for(Phase::kAfterAccept);
  return s;
}

// --- JSON ---------------------------------------------------------------

template <typename T>
Json Opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json SpecToJson(const SiteSpec& s) {
  Json trackers = Json::object();
  for (const auto& [phase, c] : s.trackers) {
    trackers[std::string(PhaseName(phase))] = {
        {"tracking_requests", c.tracking_requests},
        {"total_third_party", c.total_third_party}};
  }
  return {
      {"domain", s.domain},
      {"tld", s.tld},
      {"tranco_rank", Opt(s.tranco_rank)},
      {"tcf", s.tcf},
      {"annotated", s.annotated},
      {"banner_state", BannerStateName(s.banner_state)},
      {"opt_out_possible", s.opt_out_possible},
      {"pre_selected", s.pre_selected},
      {"operator_conflict", s.operator_conflict},
      {"cmp_id", Opt(s.cmp_id)},
      {"api_before_choice", s.api_before_choice},
      {"before_purposes", s.before_purposes},
      {"refuse_purposes", s.refuse_purposes},
      {"cookie_before_purposes", s.cookie_before_purposes},
      {"cookie_refuse_purposes", s.cookie_refuse_purposes},
      {"url_before_purposes", s.url_before_purposes},
      {"url_refuse_purposes", s.url_refuse_purposes},
      {"url_cmp_id", Opt(s.url_cmp_id)},
      {"invalid_cmp_id", Opt(s.invalid_cmp_id)},
      {"nonexistent_vendors", s.nonexistent_vendors},
      {"decoy", DecoyName(s.decoy)},
      {"shared_cookie_reuse", s.shared_cookie_reuse},
      {"purposes_beyond_tcf", s.purposes_beyond_tcf},
      {"trackers", std::move(trackers)},
  };
}

void ReadSpecFields(const Json& j, const std::string& path, SiteSpec& s) {
  static const std::set<std::string> kKnown = {
      "index", "inject", "domain", "tld", "tranco_rank", "tcf", "annotated",
      "banner_state", "opt_out_possible", "pre_selected", "operator_conflict",
      "cmp_id", "api_before_choice", "before_purposes", "refuse_purposes",
      "cookie_before_purposes", "cookie_refuse_purposes", "url_before_purposes",
      "url_refuse_purposes", "url_cmp_id", "invalid_cmp_id",
      "nonexistent_vendors", "decoy", "shared_cookie_reuse",
      "purposes_beyond_tcf", "trackers"};
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.contains(key)) PlanFail(path + ": unknown field '" + key + "'");
  }
  auto str = [&](const char* k, std::string& out) {
    if (auto v = detail::OptionalString(j, k, path)) out = *v;
  };
  auto flag = [&](const char* k, bool& out) {
    if (auto v = detail::OptionalBool(j, k, path)) out = *v;
  };
  auto num = [&](const char* k, int& out) {
    if (auto v = detail::OptionalInt(j, k, path)) out = static_cast<int>(*v);
  };
  auto opt = [&](const char* k, std::optional<int>& out) {
    if (auto v = detail::OptionalInt(j, k, path)) out = static_cast<int>(*v);
  };
  str("domain", s.domain);
  str("tld", s.tld);
  opt("tranco_rank", s.tranco_rank);
  flag("tcf", s.tcf);
  flag("annotated", s.annotated);
  if (auto v = detail::OptionalString(j, "banner_state", path)) {
    auto state = ParseBannerState(*v);
    if (!state) PlanFail(path + ": unknown banner_state '" + *v + "'");
    s.banner_state = *state;
  }
  flag("opt_out_possible", s.opt_out_possible);
  flag("pre_selected", s.pre_selected);
  flag("operator_conflict", s.operator_conflict);
  opt("cmp_id", s.cmp_id);
  flag("api_before_choice", s.api_before_choice);
  num("before_purposes", s.before_purposes);
  num("refuse_purposes", s.refuse_purposes);
  num("cookie_before_purposes", s.cookie_before_purposes);
  num("cookie_refuse_purposes", s.cookie_refuse_purposes);
  num("url_before_purposes", s.url_before_purposes);
  num("url_refuse_purposes", s.url_refuse_purposes);
  opt("url_cmp_id", s.url_cmp_id);
  opt("invalid_cmp_id", s.invalid_cmp_id);
  flag("nonexistent_vendors", s.nonexistent_vendors);
  if (auto v = detail::OptionalString(j, "decoy", path)) {
    auto decoy = ParseDecoy(*v);
    if (!decoy) PlanFail(path + ": unknown decoy '" + *v + "'");
    s.decoy = *decoy;
  }
  flag("shared_cookie_reuse", s.shared_cookie_reuse);
  flag("purposes_beyond_tcf", s.purposes_beyond_tcf);
  if (const Json* t = detail::OptionalField(j, "trackers")) {
    for (const auto& [key, value] : t->items()) {
      auto phase = ParsePhase(key);
      if (!phase) PlanFail(path + ".trackers: unknown phase '" + key + "'");
      s.trackers[*phase] = {
          static_cast<int>(detail::IntField(value, "tracking_requests", path)),
          static_cast<int>(detail::IntField(value, "total_third_party", path))};
    }
  }
}

std::pair<int, int> Bounds(const Json& j, const char* key, const std::string& path) {
  const Json* v = detail::OptionalField(j, key);
  if (!v) return {0, 0};
  if (!v->is_array() || v->size() != 2) PlanFail(path + "." + key + ": expected [lo, hi]");
  const int lo = static_cast<int>(detail::AsInt((*v)[0], path));
  const int hi = static_cast<int>(detail::AsInt((*v)[1], path));
  if (lo < 0 || hi < lo) PlanFail(path + "." + key + ": need 0 <= lo <= hi");
  return {lo, hi};
}

SimulationPlan ParsePlanJson(std::string_view text) {
  const Json j = detail::ParseJson(text, "plan");
  if (!j.is_object()) PlanFail("plan: expected an object");
  for (const auto& [key, value] : j.items()) {
    static const std::set<std::string> kKnown = {
        "seed", "site_count", "tlds", "rates", "tracker_ranges", "sites"};
    if (!kKnown.contains(key)) PlanFail("plan: unknown field '" + key + "'");
  }
  SimulationPlan plan;
  if (auto seed = detail::OptionalInt(j, "seed", "plan")) {
    plan.seed = static_cast<std::uint64_t>(*seed);
  }
  if (const Json* tlds = detail::OptionalField(j, "tlds")) {
    plan.tlds.clear();
    for (const Json& t : detail::AsArray(*tlds, "plan.tlds")) {
      std::string tld = detail::AsString(t, "plan.tlds");
      if (!tld.empty() && tld.front() == '.') tld.erase(0, 1);
      if (tld.empty()) PlanFail("plan.tlds: empty TLD");
      plan.tlds.push_back(std::move(tld));
    }
  }
  if (const Json* rates = detail::OptionalField(j, "rates")) {
    SimulationRates& r = plan.rates;
    const std::map<std::string, double*> fields = {
        {"tcf", &r.tcf},
        {"annotated", &r.annotated},
        {"broken", &r.broken},
        {"absent", &r.absent},
        {"no_opt_out", &r.no_opt_out},
        {"pre_selected", &r.pre_selected},
        {"api_before_choice", &r.api_before_choice},
        {"before_choice", &r.before_choice},
        {"non_respect", &r.non_respect},
        {"sub_threshold_non_respect", &r.sub_threshold_non_respect},
        {"shared_cookie_before_choice", &r.shared_cookie_before_choice},
        {"shared_cookie_non_respect", &r.shared_cookie_non_respect},
        {"url_only_before_choice", &r.url_only_before_choice},
        {"url_only_non_respect", &r.url_only_non_respect},
        {"cmp_id_mismatch", &r.cmp_id_mismatch},
        {"invalid_cmp_id", &r.invalid_cmp_id},
        {"nonexistent_vendors", &r.nonexistent_vendors},
        {"empty_vendors_decoy", &r.empty_vendors_decoy},
        {"legitimate_interest_decoy", &r.legitimate_interest_decoy},
        {"shared_cookie_reuse", &r.shared_cookie_reuse},
        {"purposes_beyond_tcf", &r.purposes_beyond_tcf},
        {"operator_conflict", &r.operator_conflict},
    };
    if (!rates->is_object()) PlanFail("plan.rates: expected an object");
    for (const auto& [key, value] : rates->items()) {
      auto it = fields.find(key);
      if (it == fields.end()) PlanFail("plan.rates: unknown rate '" + key + "'");
      if (!value.is_number()) PlanFail("plan.rates." + key + ": expected a number");
      const double v = value.get<double>();
      if (v < 0 || v > 1) PlanFail("plan.rates." + key + ": must lie in [0, 1]");
      *it->second = v;
    }
    if (r.broken + r.absent > 1) PlanFail("plan.rates: broken + absent exceeds 1");
  }
  if (const Json* ranges = detail::OptionalField(j, "tracker_ranges")) {
    for (const auto& [key, value] : ranges->items()) {
      auto phase = ParsePhase(key);
      if (!phase) PlanFail("plan.tracker_ranges: unknown phase '" + key + "'");
      const std::string path = "plan.tracker_ranges." + key;
      const auto [tlo, thi] = Bounds(value, "tracking", path);
      const auto [olo, ohi] = Bounds(value, "other", path);
      plan.tracker_ranges[*phase] = {tlo, thi, olo, ohi};
    }
  }
  int explicit_sites = 0;
  if (const Json* sites = detail::OptionalField(j, "sites")) {
    detail::AsArray(*sites, "plan.sites");
    for (std::size_t i = 0; i < sites->size(); ++i) {
      const std::string path = detail::Path("plan.sites", i);
      const Json& site = (*sites)[i];
      if (!site.is_object()) PlanFail(path + ": expected an object");
      SiteOverride o;
      o.index = static_cast<std::size_t>(
          detail::OptionalInt(site, "index", path).value_or(static_cast<std::int64_t>(i)));
      ReadSpecFields(site, path, o.spec);
      if (const Json* inject = detail::OptionalField(site, "inject")) {
        for (const Json& k : detail::AsArray(*inject, path + ".inject")) {
          const std::string name = detail::AsString(k, path + ".inject");
          auto kind = ParseFindingKind(name);
          if (!kind) PlanFail(path + ".inject: unknown finding kind '" + name + "'");
          o.inject.push_back(*kind);
        }
      }
      explicit_sites = std::max(explicit_sites, static_cast<int>(o.index) + 1);
      plan.overrides.push_back(std::move(o));
    }
  }
  plan.site_count = static_cast<int>(
      detail::OptionalInt(j, "site_count", "plan").value_or(explicit_sites));
  if (plan.site_count < 0) PlanFail("plan.site_count must be non-negative");
  return plan;
}

}  // namespace

std::string_view DecoyName(Decoy d) {
  switch (d) {
    case Decoy::kNone: return "none";
    case Decoy::kEmptyVendors: return "empty_vendors";
    case Decoy::kLegitimateInterestOnly: return "legitimate_interest_only";
  }
  return "";
}

std::optional<Decoy> ParseDecoy(std::string_view name) {
  for (Decoy d : {Decoy::kNone, Decoy::kEmptyVendors, Decoy::kLegitimateInterestOnly}) {
    if (DecoyName(d) == name) return d;
  }
  return std::nullopt;
}

SimulationPlan ParsePlan(std::string_view json) {
  try {
    return ParsePlanJson(json);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidPlan) throw;
    throw Error(ErrorCode::kInvalidPlan, e.what());
  }
}

void InjectFinding(SiteSpec& s, FindingKind kind, const VendorRegistry& registry,
                   std::uint64_t salt) {
  const std::string name(FindingKindName(kind));
  if (!s.tcf) PlanFail(name + " needs a TCF site");
  const int purposes = 1 + static_cast<int>(salt % kFullPurposes);
  auto need_refusal = [&] {
    if (!RefusalPossible(s)) PlanFail(name + " needs a banner that allows refusal");
  };
  switch (kind) {
    case FindingKind::kConsentBeforeChoice:
      if (s.before_purposes == 0) s.before_purposes = purposes;
      break;
    case FindingKind::kNoWayToOptOut:
      if (s.refuse_purposes || s.cookie_refuse_purposes || s.url_refuse_purposes) {
        PlanFail(name + " conflicts with post-refusal strings");
      }
      s.annotated = true;
      s.banner_state = BannerState::kPresent;
      s.opt_out_possible = false;
      s.pre_selected = false;
      break;
    case FindingKind::kPreSelected:
      if (s.annotated && s.banner_state == BannerState::kPresent &&
          !s.opt_out_possible) {
        PlanFail(name + " conflicts with NoWayToOptOut");
      }
      s.annotated = true;
      s.banner_state = BannerState::kPresent;
      s.opt_out_possible = true;
      s.pre_selected = true;
      break;
    case FindingKind::kNonRespectOfChoice:
      need_refusal();
      s.refuse_purposes = kFullPurposes;
      break;
    case FindingKind::kSharedCookieBeforeChoice:
      if (s.cookie_before_purposes == 0) s.cookie_before_purposes = purposes;
      break;
    case FindingKind::kSharedCookieNonRespect:
      need_refusal();
      if (s.cookie_refuse_purposes == 0) s.cookie_refuse_purposes = purposes;
      break;
    case FindingKind::kUrlOnlyBeforeChoice:
      if (s.before_purposes || s.cookie_before_purposes) {
        PlanFail(name + " conflicts with consent before choice");
      }
      if (s.url_before_purposes == 0) s.url_before_purposes = purposes;
      break;
    case FindingKind::kUrlOnlyNonRespect:
      need_refusal();
      if (s.refuse_purposes >= kFullPurposes || s.cookie_refuse_purposes >= kFullPurposes) {
        PlanFail(name + " conflicts with NonRespectOfChoice");
      }
      s.url_refuse_purposes = kFullPurposes;
      break;
    case FindingKind::kCmpIdMismatch: {
      const std::vector<int> known = KnownCmpIds(registry);
      if (known.size() < 2) PlanFail(name + " needs two CMPs in the CMP list");
      if (!s.cmp_id) s.cmp_id = known[salt % known.size()];
      if (registry.IdentifyCmp(*s.cmp_id).status != CmpStatus::kKnown) {
        PlanFail(name + " needs a listed site CMP");
      }
      const auto pos = std::find(known.begin(), known.end(), *s.cmp_id) - known.begin();
      const std::size_t step = 1 + salt % (known.size() - 1);
      s.url_cmp_id = known[(pos + step) % known.size()];
      break;
    }
    case FindingKind::kInvalidCmpId: {
      const std::vector<int> invalid = InvalidCmpIds(registry);
      if (invalid.empty()) PlanFail(name + " needs at least one invalid CMP id");
      if (!s.invalid_cmp_id) s.invalid_cmp_id = invalid[salt % invalid.size()];
      break;
    }
    case FindingKind::kNonexistentVendors:
      if (registry.max_vendor_id() == 0) PlanFail(name + " needs a vendor list");
      s.nonexistent_vendors = true;
      break;
  }
}

std::vector<SiteSpec> ExpandPlan(const SimulationPlan& plan,
                                 const VendorRegistry& registry) {
  std::vector<SiteSpec> specs;
  specs.reserve(plan.site_count);
  for (int i = 0; i < plan.site_count; ++i) specs.push_back(DrawSite(plan, i, registry));
  for (const SiteOverride& o : plan.overrides) {
    if (o.index >= specs.size()) {
      PlanFail("site override index " + std::to_string(o.index) +
               " is beyond site_count " + std::to_string(plan.site_count));
    }
    SiteSpec s = o.spec;
    if (s.tld.empty()) s.tld = specs[o.index].tld;
    if (s.domain.empty()) s.domain = "site" + std::to_string(o.index) + "." + s.tld;
    if (!s.tranco_rank) s.tranco_rank = specs[o.index].tranco_rank;
    for (std::size_t k = 0; k < o.inject.size(); ++k) {
      InjectFinding(s, o.inject[k], registry, SplitMix(plan.seed + o.index * 31 + k));
    }
    specs[o.index] = std::move(s);
  }
  return specs;
}

Simulation SimulateSites(std::vector<SiteSpec> specs, std::uint64_t seed,
                         const VendorRegistry& registry, const TrackerList* trackers) {
  std::vector<std::string> tracker_domains;
  if (trackers) {
    for (const auto& d : trackers->domains()) {
      // Skip entries the suffix match could never reach from a subdomain.
      if (trackers->Matches("px0." + d)) tracker_domains.push_back(d);
    }
  }

  Simulation out;
  out.manifest.seed = seed;
  std::set<std::string> domains;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    SiteSpec& s = specs[i];
    FillDefaults(s, i, seed, registry);
    Validate(s, registry);
    if (!domains.insert(s.domain).second) PlanFail("duplicate site domain " + s.domain);
    out.records.push_back(
        SiteBuilder(s, i, seed, registry, tracker_domains, trackers).Build());
    Expect(s, registry, out.manifest);
  }
  std::sort(out.manifest.findings.begin(), out.manifest.findings.end());
  std::sort(out.manifest.notes.begin(), out.manifest.notes.end());
  out.manifest.sites = std::move(specs);
  return out;
}

Simulation SimulateCorpus(const SimulationPlan& plan, const VendorRegistry& registry,
                          const TrackerList* trackers) {
  return SimulateSites(ExpandPlan(plan, registry), plan.seed, registry, trackers);
}

std::string SerializeManifest(const SimulationManifest& m) {
  Json findings = Json::array();
  for (const auto& f : m.findings) {
    findings.push_back({{"domain", f.domain}, {"kind", FindingKindName(f.kind)}});
  }
  Json notes = Json::array();
  for (const auto& n : m.notes) {
    notes.push_back({{"domain", n.domain}, {"note", NoteKindName(n.kind)}});
  }
  Json sites = Json::array();
  for (const auto& s : m.sites) sites.push_back(SpecToJson(s));
  return Json{{"seed", m.seed},
              {"findings", std::move(findings)},
              {"notes", std::move(notes)},
              {"sites", std::move(sites)}}
             .dump(1) +
         "\n";
}

}  // namespace tcfaudit
