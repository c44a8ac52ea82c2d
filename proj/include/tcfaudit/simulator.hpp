#pragma once

// Seeded corpus generator. Every site is described by a SiteSpec; the
// expected findings (the manifest) are derived from the specs alone, so the
// simulator doubles as the violation engine's test oracle. Expectations
// assume the engine's default thresholds.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tcfaudit/capture.hpp"
#include "tcfaudit/engine.hpp"
#include "tcfaudit/registry.hpp"
#include "tcfaudit/trackers.hpp"

namespace tcfaudit {

enum class Decoy {
  kNone,
  kEmptyVendors,            // purposes set, vendor list empty
  kLegitimateInterestOnly,  // purposes set, only LI-based vendors
};

std::string_view DecoyName(Decoy d);
std::optional<Decoy> ParseDecoy(std::string_view name);

struct SiteSpec {
  std::string domain;  // empty: "site<index>.<tld>"
  std::string tld;     // empty: drawn from the plan's TLDs
  std::optional<int> tranco_rank;

  bool tcf = true;
  bool annotated = true;
  BannerState banner_state = BannerState::kPresent;
  bool opt_out_possible = true;
  bool pre_selected = false;
  // A second operator disagrees in a way reconciliation resolves back to the
  // values above.
  bool operator_conflict = false;

  std::optional<int> cmp_id;  // nullopt: drawn from the registry's CMPs
  // Emit a (purpose-free) standard-API string before any choice even when
  // nothing is injected there.
  bool api_before_choice = true;

  // TCF purpose counts (0..5) of the strings written on each channel.
  int before_purposes = 0;
  int refuse_purposes = 0;
  int cookie_before_purposes = 0;
  int cookie_refuse_purposes = 0;
  int url_before_purposes = 0;
  int url_refuse_purposes = 0;

  std::optional<int> url_cmp_id;      // CMP id in URL strings
  std::optional<int> invalid_cmp_id;  // extra purpose-free URL string
  bool nonexistent_vendors = false;
  Decoy decoy = Decoy::kNone;
  bool shared_cookie_reuse = false;
  bool purposes_beyond_tcf = false;

  std::map<Phase, PhaseTrackerCount> trackers;

  friend bool operator==(const SiteSpec&, const SiteSpec&) = default;
};

// Probability of each trait in randomly drawn sites. Every rate defaults to
// zero except tcf and annotated, so an empty plan yields compliant sites.
struct SimulationRates {
  double tcf = 1.0;
  double annotated = 1.0;
  double broken = 0;
  double absent = 0;
  double no_opt_out = 0;
  double pre_selected = 0;
  double api_before_choice = 0.5;
  double before_choice = 0;
  double non_respect = 0;
  double sub_threshold_non_respect = 0;
  double shared_cookie_before_choice = 0;
  double shared_cookie_non_respect = 0;
  double url_only_before_choice = 0;
  double url_only_non_respect = 0;
  double cmp_id_mismatch = 0;
  double invalid_cmp_id = 0;
  double nonexistent_vendors = 0;
  double empty_vendors_decoy = 0;
  double legitimate_interest_decoy = 0;
  double shared_cookie_reuse = 0;
  double purposes_beyond_tcf = 0;
  double operator_conflict = 0;
};

struct TrackerRange {
  int tracking_min = 0;
  int tracking_max = 0;
  int other_min = 0;  // third-party requests outside the tracker list
  int other_max = 0;
};

struct SiteOverride {
  std::size_t index = 0;
  SiteSpec spec;  // starts from a compliant default, not the drawn site
  std::vector<FindingKind> inject;
};

struct SimulationPlan {
  std::uint64_t seed = 0;
  int site_count = 0;
  std::vector<std::string> tlds{"fr", "de", "it", "es", "uk"};
  SimulationRates rates;
  std::map<Phase, TrackerRange> tracker_ranges;
  std::vector<SiteOverride> overrides;  // replace drawn sites by index
};

// Plan JSON: {seed, site_count, tlds, rates: {...}, tracker_ranges: {<phase>:
// {tracking: [lo, hi], other: [lo, hi]}}, sites: [{index, inject: [<kind>],
// <SiteSpec fields>}]}. Throws Error{kInvalidPlan}.
SimulationPlan ParsePlan(std::string_view json);

// Applies one finding kind to a spec, as an override's "inject" list does.
// Throws Error{kInvalidPlan} when the kind cannot coexist with the spec.
void InjectFinding(SiteSpec& spec, FindingKind kind,
                   const VendorRegistry& registry, std::uint64_t salt = 0);

struct ExpectedFinding {
  std::string domain;
  FindingKind kind;

  friend auto operator<=>(const ExpectedFinding&, const ExpectedFinding&) = default;
};

struct ExpectedNote {
  std::string domain;
  NoteKind kind;

  friend auto operator<=>(const ExpectedNote&, const ExpectedNote&) = default;
};

struct SimulationManifest {
  std::uint64_t seed = 0;
  std::vector<SiteSpec> sites;
  std::vector<ExpectedFinding> findings;  // sorted
  std::vector<ExpectedNote> notes;        // sorted
};

struct Simulation {
  std::vector<SessionRecord> records;
  SimulationManifest manifest;
};

// Resolves the plan into one spec per site.
std::vector<SiteSpec> ExpandPlan(const SimulationPlan& plan,
                                 const VendorRegistry& registry);

// Throws Error{kInvalidPlan}. Tracking requests need a non-empty tracker
// list to draw hosts from.
Simulation SimulateSites(std::vector<SiteSpec> specs, std::uint64_t seed,
                         const VendorRegistry& registry,
                         const TrackerList* trackers = nullptr);

Simulation SimulateCorpus(const SimulationPlan& plan,
                          const VendorRegistry& registry,
                          const TrackerList* trackers = nullptr);

std::string SerializeManifest(const SimulationManifest& manifest);

}  // namespace tcfaudit
