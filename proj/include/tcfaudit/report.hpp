#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tcfaudit/engine.hpp"

namespace tcfaudit {

struct Ratio {
  int numerator = 0;
  int denominator = 0;

  // 100 * numerator / denominator rounded half-up to `decimals` places; 0
  // for an empty denominator.
  double Percent(int decimals = 1) const;

  friend bool operator==(const Ratio&, const Ratio&) = default;
};

// Which sites a finding kind is measured against.
enum class Population {
  kTcf,        // sites where a TCF banner was detected
  kAnnotated,  // TCF sites with a banner annotation
  kOptOut,     // annotated sites with a working banner that allows refusal
};

Population DenominatorFor(FindingKind kind);
std::string_view PopulationName(Population p);

struct TldBreakdown {
  std::string tld;
  int sites = 0;
  int tcf_sites = 0;
  std::map<FindingKind, Ratio> kinds;

  friend bool operator==(const TldBreakdown&, const TldBreakdown&) = default;
};

enum class CmpBucket { kNamed, kOthers, kIncorrectId, kNoConsentString };

struct CmpRow {
  CmpBucket bucket = CmpBucket::kNamed;
  std::optional<int> cmp_id;  // set for kNamed only
  std::string label;
  int sites = 0;

  friend bool operator==(const CmpRow&, const CmpRow&) = default;
};

struct RankedSite {
  std::string domain;
  std::optional<int> tranco_rank;
  std::vector<FindingKind> kinds;

  friend bool operator==(const RankedSite&, const RankedSite&) = default;
};

struct TrackerPhaseStats {
  Phase phase = Phase::kNoAction;
  int sites = 0;
  long long tracking_requests = 0;
  long long total_third_party = 0;

  double TrackingMean() const;
  double ThirdPartyMean() const;

  friend bool operator==(const TrackerPhaseStats&,
                         const TrackerPhaseStats&) = default;
};

struct AuditReport {
  int total_sites = 0;
  int tcf_sites = 0;
  int annotated_sites = 0;
  int opt_out_sites = 0;

  std::map<FindingKind, Ratio> totals;
  // Annotated sites with at least one of the four core kinds.
  Ratio any_violation;
  // Post-refusal strings with 1..4 purposes, over the opt-out population.
  Ratio sub_threshold_non_respect;

  std::vector<TldBreakdown> tlds;  // sorted by TLD
  // Partition of the TCF sites by attributed CMP.
  std::vector<CmpRow> cmps;
  std::map<FindingKind, std::vector<CmpRow>> cmps_by_kind;
  std::vector<RankedSite> top_sites;
  std::vector<TrackerPhaseStats> trackers;  // over the opt-out population
  std::map<NoteKind, int> notes;            // distinct sites per note kind

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

struct ReportOptions {
  int cmp_threshold = 5;       // named rows in the site partition
  int kind_cmp_threshold = 3;  // named rows in the per-kind tables
  int top_n = 10;
};

// Throws Error{kInconsistentInputs} when a finding or note names a domain
// without a site summary, or a domain appears twice.
AuditReport BuildReport(const AuditResult& audit,
                        const ReportOptions& options = {});

enum class ReportFormat { kJson, kCsv, kMarkdown };

std::optional<ReportFormat> ParseReportFormat(std::string_view name);
std::string RenderReport(const AuditReport& report, ReportFormat format);
// Inverse of the JSON rendering. Throws Error{kSchemaError}.
AuditReport ParseReportJson(std::string_view text);

}  // namespace tcfaudit
