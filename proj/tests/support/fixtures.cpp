#include "fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tcfaudit::testing {
namespace {

constexpr const char* kTlds[] = {"fr", "de", "it", "es", "uk"};

constexpr int kOptOut = 508;
constexpr int kNoOptOut = 38;
constexpr int kBroken = 14;
constexpr int kAnnotated = kOptOut + kNoOptOut + kBroken;  // 560

SiteSpec Tcf(std::size_t i) {
  SiteSpec s;
  s.tld = kTlds[i % 5];
  s.annotated = false;
  return s;
}

// Sites 0..507 allow refusal, 508..545 offer no way to refuse and 546..559
// have a broken banner.
std::vector<SiteSpec> AnnotatedPopulation() {
  std::vector<SiteSpec> sites;
  for (int i = 0; i < kAnnotated; ++i) {
    SiteSpec s = Tcf(i);
    s.annotated = true;
    if (i >= kOptOut + kNoOptOut) {
      s.banner_state = BannerState::kBroken;
    } else if (i >= kOptOut) {
      s.opt_out_possible = false;
    }
    sites.push_back(std::move(s));
  }
  return sites;
}

// Spreads `total` over `n` sites as evenly as integers allow.
int Share(long total, int n, int i) {
  return static_cast<int>(total / n + (i < total % n ? 1 : 0));
}

}  // namespace

std::string SourcePath(const std::string& relative) {
  return std::string(TCFAUDIT_SOURCE_DIR) + "/" + relative;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const VendorRegistry& FixtureRegistry() {
  static const VendorRegistry registry =
      BuildRegistry(ReadFile(SourcePath("data/gvl-fixture.json")),
                    ReadFile(SourcePath("data/cmp-list-fixture.json")));
  return registry;
}

const TrackerList& FixtureTrackers() {
  static const TrackerList trackers =
      TrackerList::Parse(ReadFile(SourcePath("data/trackers-fixture.json")));
  return trackers;
}

std::vector<SiteSpec> TableThreeSites() {
  std::vector<SiteSpec> sites = AnnotatedPopulation();
  for (int i = 0; i < 236; ++i) sites[i].pre_selected = true;
  // Non-respect: 10 pre-selected banners and 17 others.
  for (int i = 0; i < 10; ++i) sites[i].refuse_purposes = 5;
  for (int i = 236; i < 253; ++i) sites[i].refuse_purposes = 5;
  for (int i = 253; i < 287; ++i) sites[i].refuse_purposes = 1 + i % 4;

  // Consent before choice on annotated sites: 32 already violating, 20
  // without a refusal option and 13 otherwise clean.
  auto before = [&](int i) { sites[i].before_purposes = 1 + i % 5; };
  for (int i = 0; i < 32; ++i) before(i * 7);
  for (int i = kOptOut; i < kOptOut + 20; ++i) before(i);
  for (int i = 300; i < 313; ++i) before(i);

  // 866 TCF sites without annotations, 76 of which store consent early.
  for (int i = 0; i < 866; ++i) {
    SiteSpec s = Tcf(sites.size());
    if (i < 76) s.before_purposes = 1 + i % 5;
    s.api_before_choice = i % 3 != 0;
    sites.push_back(std::move(s));
  }
  for (int i = 0; i < 74; ++i) {
    SiteSpec s = Tcf(sites.size());
    s.tcf = false;
    s.api_before_choice = false;
    sites.push_back(std::move(s));
  }
  return sites;
}

std::vector<SiteSpec> SharedCookieSites() {
  std::vector<SiteSpec> sites = AnnotatedPopulation();
  sites[40].cookie_before_purposes = 5;
  sites[520].cookie_before_purposes = 2;
  sites[550].cookie_before_purposes = 1;
  for (int i = 0; i < 20; ++i) {
    sites[100 + i * 11].cookie_refuse_purposes = i < 3 ? 5 : 1 + i % 4;
  }
  // Reuse of an injected cookie is noted, never a finding.
  for (int i = 0; i < 6; ++i) sites[300 + i].shared_cookie_reuse = true;
  return sites;
}

std::vector<SiteSpec> UrlChannelSites() {
  std::vector<SiteSpec> sites = AnnotatedPopulation();
  while (sites.size() < 1100) sites.push_back(Tcf(sites.size()));

  for (int i = 600; i < 666; ++i) sites[i].before_purposes = 1 + i % 5;
  for (int i = 646; i < 666; ++i) sites[i].url_before_purposes = 5;
  for (int i = 700; i < 769; ++i) sites[i].url_before_purposes = 1 + i % 5;

  for (int i = 0; i < 27; ++i) sites[i].refuse_purposes = 5;
  for (int i = 0; i < 10; ++i) sites[i].url_refuse_purposes = 5;
  for (int i = 100; i < 126; ++i) sites[i].url_refuse_purposes = 5;
  // Partial URL consent after refusal stays below the threshold.
  for (int i = 200; i < 210; ++i) sites[i].url_refuse_purposes = 3;

  for (int i = 800; i < 837; ++i) {
    sites[i].cmp_id = 10;
    sites[i].url_cmp_id = 20 + i % 50;
  }
  return sites;
}

std::vector<SiteSpec> InvalidCmpSites() {
  std::vector<SiteSpec> sites;
  for (int i = 0; i < 203; ++i) {
    SiteSpec s = Tcf(i);
    const int id = i < 155 ? 1 : i < 200 ? 0 : 4095;
    if (i % 2 == 0) {
      s.cmp_id = id;
    } else {
      s.cmp_id = 100 + i;
      s.invalid_cmp_id = id;
    }
    sites.push_back(std::move(s));
  }
  // Listed CMPs and no URL traffic: nothing to report.
  for (int i = 0; i < 40; ++i) sites.push_back(Tcf(sites.size()));
  return sites;
}

std::vector<SiteSpec> TrackerSites() {
  struct Totals {
    Phase phase;
    long tracking;
    long third_party;
  };
  constexpr Totals kTotals[] = {{Phase::kNoAction, 11450, 17800},
                                {Phase::kAfterRefuse, 14620, 21590},
                                {Phase::kAfterAccept, 20112, 28829}};
  std::vector<SiteSpec> sites = AnnotatedPopulation();
  for (int i = 0; i < kAnnotated; ++i) {
    for (const Totals& t : kTotals) {
      if (i < kOptOut) {
        sites[i].trackers[t.phase] = {Share(t.tracking, kOptOut, i),
                                      Share(t.third_party, kOptOut, i)};
      } else if (t.phase != Phase::kAfterRefuse &&
                 (t.phase == Phase::kNoAction ||
                  sites[i].banner_state == BannerState::kPresent)) {
        // Outside the refusal population; must not move the means.
        sites[i].trackers[t.phase] = {90, 120};
      }
    }
  }
  return sites;
}

ConsentString RandomConsent(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  ConsentString c;
  c.created = std::uniform_int_distribution<std::int64_t>(0, (1LL << 36) - 1)(rng);
  c.last_updated = std::uniform_int_distribution<std::int64_t>(0, (1LL << 36) - 1)(rng);
  c.cmp_id = pick(0, 4095);
  c.cmp_version = pick(0, 4095);
  c.consent_screen = pick(0, 63);
  c.consent_language = {static_cast<char>('A' + pick(0, 25)),
                        static_cast<char>('A' + pick(0, 25))};
  c.vendor_list_version = pick(0, 4095);
  for (int p = 1; p <= kPurposeBits; ++p) {
    if (pick(0, 2) == 0) c.allowed_purposes.insert(p);
  }
  c.max_vendor_id = pick(0, 3) == 0 ? pick(0, 40) : pick(1, 3000);
  const int density = pick(0, 4);
  for (int v = 1; v <= c.max_vendor_id; ++v) {
    const bool on = density == 0 ? pick(0, 50) == 0
                    : density == 4 ? pick(0, 50) != 0
                                   : pick(0, 3) < density;
    if (on) c.allowed_vendors.insert(v);
  }
  if (pick(0, 2) != 0) {
    VendorSection s;
    s.encoding = pick(0, 1) ? VendorEncoding::kRange : VendorEncoding::kBitfield;
    s.default_consent = pick(0, 1) == 1;
    c.vendor_section = s;
  }
  return c;
}

SimulationPlan OraclePlan() {
  return ParsePlan(ReadFile(SourcePath("tests/data/oracle_plan.json")));
}

}  // namespace tcfaudit::testing
