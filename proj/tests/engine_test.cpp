#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "tcfaudit/consent.hpp"
#include "tcfaudit/engine.hpp"
#include "tcfaudit/error.hpp"
#include "tcfaudit/simulator.hpp"

namespace tcfaudit {
namespace {

using testing::FixtureRegistry;
using testing::FixtureTrackers;

// Vendor 1 of the fixture GVL relies on consent for purpose 1; vendor 11
// only on legitimate interest.
std::string Consent(std::set<int> purposes, std::set<int> vendors, int cmp_id = 10) {
  ConsentString c;
  c.created = c.last_updated = 15698880000;
  c.cmp_id = cmp_id;
  c.vendor_list_version = 168;
  c.allowed_purposes = std::move(purposes);
  c.allowed_vendors = std::move(vendors);
  c.max_vendor_id = std::max(670, c.allowed_vendors.empty() ? 0 : *c.allowed_vendors.rbegin());
  return EncodeConsent(c);
}

std::set<int> Purposes(int n) {
  std::set<int> out;
  for (int p = 1; p <= n; ++p) out.insert(p);
  return out;
}

ConsentObservation Obs(Channel channel, std::string raw) {
  ConsentObservation o;
  o.channel = channel;
  o.raw = std::move(raw);
  o.page_url = "https://www.site.fr/";
  if (IsUrlChannel(channel)) o.request_url = "https://sync.example/px?gdpr_consent=" + o.raw;
  return o;
}

SessionRecord Site(bool annotated = true, bool opt_out = true) {
  SessionRecord r;
  r.domain = "site.fr";
  r.tld = "fr";
  r.tcf_banner_detected = true;
  r.phases[Phase::kNoAction];
  if (annotated) {
    r.annotations.push_back({BannerState::kPresent, opt_out, false, "op"});
    if (opt_out) r.phases[Phase::kAfterRefuse];
  }
  return r;
}

std::multiset<FindingKind> Kinds(const AuditResult& a) {
  std::multiset<FindingKind> out;
  for (const auto& f : a.findings) out.insert(f.kind);
  return out;
}

AuditResult AuditOne(const SessionRecord& r, EngineOptions options = {}) {
  return ViolationEngine(FixtureRegistry(), options).Audit({r});
}

TEST(Engine, ConsentBeforeChoiceNeedsOnePurpose) {
  SessionRecord r = Site(false);
  r.phases[Phase::kNoAction].observations.push_back(
      Obs(Channel::kCmpFunction, Consent({}, {})));
  EXPECT_TRUE(AuditOne(r).findings.empty());

  r.phases[Phase::kNoAction].observations.push_back(
      Obs(Channel::kCmpLocatorPostMessage, Consent({1}, {1})));
  const AuditResult a = AuditOne(r);
  ASSERT_EQ(a.findings.size(), 1u);
  const ViolationFinding& f = a.findings[0];
  EXPECT_EQ(f.kind, FindingKind::kConsentBeforeChoice);
  EXPECT_EQ(f.purposes_count, 1);
  ASSERT_EQ(f.evidence.size(), 1u);
  EXPECT_EQ(f.evidence[0].index, 1u);
  ASSERT_TRUE(f.cmp);
  EXPECT_EQ(f.cmp->name, "Fixture CMP 10");
}

TEST(Engine, NonRespectNeedsAllFivePurposes) {
  SessionRecord r = Site();
  auto& refuse = r.phases[Phase::kAfterRefuse].observations;
  refuse.push_back(Obs(Channel::kCmpFunction, Consent(Purposes(4), {1, 2})));
  AuditResult a = AuditOne(r);
  EXPECT_TRUE(a.findings.empty());
  ASSERT_EQ(a.notes.size(), 1u);
  EXPECT_EQ(a.notes[0].kind, NoteKind::kSubThresholdNonRespect);
  EXPECT_EQ(a.notes[0].purposes_count, 4);

  refuse.push_back(Obs(Channel::kCmpFunction, Consent(Purposes(5), {1, 2})));
  a = AuditOne(r);
  EXPECT_EQ(Kinds(a), (std::multiset<FindingKind>{FindingKind::kNonRespectOfChoice}));
  EXPECT_TRUE(a.notes.empty());

  EngineOptions lenient;
  lenient.non_respect_min_purposes = 4;
  refuse.erase(refuse.begin() + 1);
  EXPECT_EQ(Kinds(AuditOne(r, lenient)),
            (std::multiset<FindingKind>{FindingKind::kNonRespectOfChoice}));
}

TEST(Engine, DecoysAreExcludedWithNotes) {
  SessionRecord r = Site(false);
  auto& before = r.phases[Phase::kNoAction].observations;
  before.push_back(Obs(Channel::kCmpFunction, Consent(Purposes(5), {})));
  before.push_back(Obs(Channel::kCmpFunction, Consent(Purposes(5), {11, 22})));
  const AuditResult a = AuditOne(r);
  EXPECT_TRUE(a.findings.empty());
  std::set<NoteKind> notes;
  for (const auto& n : a.notes) notes.insert(n.kind);
  EXPECT_EQ(notes, (std::set<NoteKind>{NoteKind::kEmptyVendorsExcluded,
                                       NoteKind::kLegitimateInterestOnlyExcluded}));
}

TEST(Engine, BannerFindings) {
  SessionRecord r = Site(true, false);
  EXPECT_EQ(Kinds(AuditOne(r)), (std::multiset<FindingKind>{FindingKind::kNoWayToOptOut}));

  r = Site();
  r.annotations[0].pre_selected = true;
  EXPECT_EQ(Kinds(AuditOne(r)), (std::multiset<FindingKind>{FindingKind::kPreSelected}));

  // Broken banners are neither.
  r.annotations[0].banner_state = BannerState::kBroken;
  EXPECT_TRUE(AuditOne(r).findings.empty());
}

TEST(Engine, DetectorErrors) {
  const ViolationEngine engine(FixtureRegistry());
  SessionRecord r = Site(false);
  try {
    engine.DetectBannerViolations(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoAnnotations);
  }
  r = Site();
  r.phases.erase(Phase::kAfterRefuse);
  try {
    engine.DetectNonRespect(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingPhase);
  }
}

TEST(Engine, SharedCookieEscalation) {
  SessionRecord r = Site();
  r.phases[Phase::kNoAction].observations.push_back(
      Obs(Channel::kSharedCookie, Consent({1}, {1})));
  r.phases[Phase::kAfterRefuse].observations.push_back(
      Obs(Channel::kSharedCookie, Consent({1, 3}, {1})));
  EXPECT_EQ(Kinds(AuditOne(r)),
            (std::multiset<FindingKind>{FindingKind::kConsentBeforeChoice,
                                        FindingKind::kSharedCookieBeforeChoice,
                                        FindingKind::kSharedCookieNonRespect}));

  r.shared_cookie_probe = SharedCookieProbe{"abc", "abc"};
  const AuditResult a = AuditOne(r);
  EXPECT_TRUE(std::any_of(a.notes.begin(), a.notes.end(), [](const AuditNote& n) {
    return n.kind == NoteKind::kSharedCookieReuse;
  }));
}

TEST(Engine, UrlChannelComplementsApi) {
  SessionRecord r = Site();
  r.phases[Phase::kNoAction].observations.push_back(
      Obs(Channel::kUrlGet, Consent({1}, {1})));
  r.phases[Phase::kAfterRefuse].observations.push_back(
      Obs(Channel::kUrlPost, Consent(Purposes(5), {1})));
  EXPECT_EQ(Kinds(AuditOne(r)),
            (std::multiset<FindingKind>{FindingKind::kUrlOnlyBeforeChoice,
                                        FindingKind::kUrlOnlyNonRespect}));

  // Once the API shows the same violation, the URL finding is redundant.
  r.phases[Phase::kNoAction].observations.push_back(
      Obs(Channel::kCmpFunction, Consent({1}, {1})));
  r.phases[Phase::kAfterRefuse].observations.push_back(
      Obs(Channel::kCmpFunction, Consent(Purposes(5), {1})));
  EXPECT_EQ(Kinds(AuditOne(r)),
            (std::multiset<FindingKind>{FindingKind::kConsentBeforeChoice,
                                        FindingKind::kNonRespectOfChoice}));
}

TEST(Engine, CmpIdChecks) {
  SessionRecord r = Site(false);
  auto& before = r.phases[Phase::kNoAction].observations;
  before.push_back(Obs(Channel::kCmpFunction, Consent({}, {}, 10)));
  before.push_back(Obs(Channel::kUrlGet, Consent({}, {}, 12)));
  EXPECT_EQ(Kinds(AuditOne(r)), (std::multiset<FindingKind>{FindingKind::kCmpIdMismatch}));

  // An unlisted id in the URL is not a mismatch between two CMPs.
  before[1] = Obs(Channel::kUrlGet, Consent({}, {}, 900));
  EXPECT_TRUE(AuditOne(r).findings.empty());

  before[1] = Obs(Channel::kUrlGet, Consent({}, {}, 4095));
  const AuditResult a = AuditOne(r);
  ASSERT_EQ(Kinds(a), (std::multiset<FindingKind>{FindingKind::kInvalidCmpId}));
  EXPECT_EQ(a.findings[0].cmp->id, 4095);
  EXPECT_EQ(a.findings[0].cmp->status, CmpStatus::kInvalid);
}

TEST(Engine, NonexistentVendors) {
  SessionRecord r = Site(false);
  r.phases[Phase::kNoAction].observations.push_back(
      Obs(Channel::kCmpFunction, Consent({}, {1, 671})));
  EXPECT_EQ(Kinds(AuditOne(r)), (std::multiset<FindingKind>{FindingKind::kNonexistentVendors}));
  EXPECT_TRUE(ExceedsVendorList(DecodeConsent(Consent({}, {1, 671})), 670));
  EXPECT_FALSE(ExceedsVendorList(DecodeConsent(Consent({}, {1, 670})), 670));
}

TEST(Engine, NonTcfSitesAreIgnored) {
  SessionRecord r = Site(false);
  r.tcf_banner_detected = false;
  r.phases[Phase::kNoAction].observations.push_back(
      Obs(Channel::kCmpFunction, Consent(Purposes(5), {1})));
  const AuditResult a = AuditOne(r);
  EXPECT_TRUE(a.findings.empty());
  ASSERT_EQ(a.sites.size(), 1u);
  EXPECT_FALSE(a.sites[0].tcf_banner_detected);
}

TEST(Engine, UndecodableStringsBecomeNotes) {
  SessionRecord r = Site(false);
  r.phases[Phase::kNoAction].observations.push_back(Obs(Channel::kCmpFunction, "%%%"));
  const AuditResult a = AuditOne(r);
  EXPECT_TRUE(a.findings.empty());
  ASSERT_EQ(a.notes.size(), 1u);
  EXPECT_EQ(a.notes[0].kind, NoteKind::kUndecodableObservation);
}

TEST(Engine, TrackerCounts) {
  SessionRecord r = Site(false);
  auto& reqs = r.phases[Phase::kNoAction].requests;
  reqs.push_back({"https://px1.advertising-01.com/c", HttpMethod::kGet, true, "https://www.site.fr/"});
  reqs.push_back({"https://cdn.other.net/lib.js", HttpMethod::kGet, true, "https://www.site.fr/"});
  reqs.push_back({"https://img.site.fr/a.png", HttpMethod::kGet, false, "https://www.site.fr/"});
  const auto counts = CountTrackers(r, FixtureTrackers());
  EXPECT_EQ(counts.at(Phase::kNoAction), (PhaseTrackerCount{1, 2}));
}

// --- Corpus-level properties --------------------------------------------------

Simulation OracleCorpus() {
  return SimulateCorpus(testing::OraclePlan(), FixtureRegistry(), &FixtureTrackers());
}

TEST(EngineCorpus, MatchesSimulatorManifest) {
  const Simulation sim = OracleCorpus();
  const AuditResult a = ViolationEngine(FixtureRegistry()).Audit(sim.records);
  std::vector<ExpectedFinding> got;
  for (const auto& f : a.findings) got.push_back({f.domain, f.kind});
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, sim.manifest.findings);

  std::vector<ExpectedNote> notes;
  for (const auto& n : a.notes) notes.push_back({n.domain, n.kind});
  std::sort(notes.begin(), notes.end());
  notes.erase(std::unique(notes.begin(), notes.end()), notes.end());
  EXPECT_EQ(notes, sim.manifest.notes);
}

TEST(EngineCorpus, ThreadCountDoesNotChangeResults) {
  const Simulation sim = OracleCorpus();
  EngineOptions one;
  one.threads = 1;
  EngineOptions many;
  many.threads = 7;
  EXPECT_EQ(ViolationEngine(FixtureRegistry(), one).Audit(sim.records),
            ViolationEngine(FixtureRegistry(), many).Audit(sim.records));
}

TEST(EngineCorpus, SerializationRoundTrips) {
  const Simulation sim = OracleCorpus();
  const AuditResult a = ViolationEngine(FixtureRegistry(), {}, &FixtureTrackers()).Audit(sim.records);
  const std::string text = SerializeAudit(a);
  EXPECT_EQ(ParseAudit(text), a);
  EXPECT_EQ(SerializeAudit(ParseAudit(text)), text);
}

TEST(EngineCorpus, RecordOrderDoesNotMatter) {
  Simulation sim = OracleCorpus();
  const AuditResult a = ViolationEngine(FixtureRegistry()).Audit(sim.records);
  std::shuffle(sim.records.begin(), sim.records.end(), std::mt19937(9));
  const AuditResult b = ViolationEngine(FixtureRegistry()).Audit(sim.records);
  auto key = [](const AuditResult& r) {
    std::multiset<std::pair<std::string, FindingKind>> out;
    for (const auto& f : r.findings) out.insert({f.domain, f.kind});
    return out;
  };
  EXPECT_EQ(key(a), key(b));
}

// Stricter thresholds can only remove violations. A URL-only finding may
// turn into its API counterpart and back, so both count as the same kind.
FindingKind Fold(FindingKind k) {
  if (k == FindingKind::kUrlOnlyBeforeChoice) return FindingKind::kConsentBeforeChoice;
  if (k == FindingKind::kUrlOnlyNonRespect) return FindingKind::kNonRespectOfChoice;
  return k;
}

TEST(EngineCorpus, ThresholdsAreMonotone) {
  const Simulation sim = OracleCorpus();
  auto run = [&](int before, int nr, int sc) {
    EngineOptions o;
    o.before_choice_min_purposes = before;
    o.non_respect_min_purposes = nr;
    o.shared_cookie_non_respect_min_purposes = sc;
    std::set<std::pair<std::string, FindingKind>> out;
    for (const auto& f : ViolationEngine(FixtureRegistry(), o).Audit(sim.records).findings) {
      out.insert({f.domain, Fold(f.kind)});
    }
    return out;
  };
  std::vector<std::tuple<int, int, int>> ladder = {
      {1, 1, 1}, {1, 3, 1}, {2, 3, 2}, {3, 4, 3}, {4, 5, 4}, {5, 5, 5}};
  auto previous = run(1, 1, 1);
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    const auto [b, n, s] = ladder[i];
    const auto current = run(b, n, s);
    EXPECT_TRUE(std::includes(previous.begin(), previous.end(), current.begin(), current.end()))
        << "thresholds " << b << "/" << n << "/" << s;
    previous = current;
  }
}

}  // namespace
}  // namespace tcfaudit
