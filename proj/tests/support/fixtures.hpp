#pragma once

// Helpers shared by the unit tests and the acceptance runner: snapshot
// loading plus corpora shaped after the published measurement counts.

#include <random>
#include <string>
#include <vector>

#include "tcfaudit/consent.hpp"
#include "tcfaudit/registry.hpp"
#include "tcfaudit/simulator.hpp"
#include "tcfaudit/trackers.hpp"

namespace tcfaudit::testing {

std::string SourcePath(const std::string& relative);
std::string ReadFile(const std::string& path);

// data/gvl-fixture.json + data/cmp-list-fixture.json.
const VendorRegistry& FixtureRegistry();
const TrackerList& FixtureTrackers();

// 1426 TCF sites (+74 without TCF), 560 annotated, 38 without a refusal
// option, 14 broken banners, 508 allowing refusal. Violations: 141 consent
// before choice (65 on annotated sites), 236 pre-selected, 27 non-respect,
// 34 sub-threshold refusals; 304 annotated sites with a core violation.
std::vector<SiteSpec> TableThreeSites();

// The 560 annotated sites above with the shared cookie written before any
// choice on 3 of them and after refusal on 20 (3 of those with 5 purposes).
std::vector<SiteSpec> SharedCookieSites();

// 1100 TCF sites: 66 with consent before choice via the API and 69 more seen
// only in URLs, 27 non-respect via the API and 26 more only in URLs, 37 with
// a URL CMP id disagreeing with the site's. 20 sites leak in both channels.
std::vector<SiteSpec> UrlChannelSites();

// 203 TCF sites whose strings carry CMP id 1 (155), 0 (45) or 4095 (3); half
// use the id everywhere, the rest only in one URL string.
std::vector<SiteSpec> InvalidCmpSites();

// The 560 annotated sites with per-phase tracker counts; over the 508 sites
// allowing refusal, tracking / third-party request totals are
//   no_action 11450 / 17800, after_refuse 14620 / 21590,
//   after_accept 20112 / 28829.
std::vector<SiteSpec> TrackerSites();

// Any valid v1 string: all header fields drawn over their full width, vendor
// sets from sparse to dense, and a forced vendor layout two times in three.
ConsentString RandomConsent(std::mt19937_64& rng);

// 500 sites from tests/data/oracle_plan.json.
SimulationPlan OraclePlan();

}  // namespace tcfaudit::testing
