#include "tcfaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "json_util.hpp"
#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

using detail::Json;

std::string FormatFixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string_view CmpBucketName(CmpBucket b) {
  switch (b) {
    case CmpBucket::kNamed: return "named";
    case CmpBucket::kOthers: return "others";
    case CmpBucket::kIncorrectId: return "incorrect_cmp_id";
    case CmpBucket::kNoConsentString: return "no_consent_string";
  }
  return "";
}

std::optional<CmpBucket> ParseCmpBucket(std::string_view s) {
  for (CmpBucket b : {CmpBucket::kNamed, CmpBucket::kOthers,
                      CmpBucket::kIncorrectId, CmpBucket::kNoConsentString}) {
    if (CmpBucketName(b) == s) return b;
  }
  return std::nullopt;
}

std::optional<Population> ParsePopulation(std::string_view s) {
  for (Population p :
       {Population::kTcf, Population::kAnnotated, Population::kOptOut}) {
    if (PopulationName(p) == s) return p;
  }
  return std::nullopt;
}

bool InPopulation(const SiteSummary& s, Population p) {
  switch (p) {
    case Population::kTcf: return s.tcf_banner_detected;
    case Population::kAnnotated: return s.tcf_banner_detected && s.annotated;
    case Population::kOptOut:
      return s.tcf_banner_detected && s.annotated && s.refusal_possible;
  }
  return false;
}

// Groups sites by CMP. Ids seen fewer than `threshold` times fold into
// "others"; the two fixed buckets always come last.
std::vector<CmpRow> PartitionByCmp(
    const std::vector<std::optional<CmpIdentity>>& cmps, int threshold) {
  std::map<int, int> counts;
  std::map<int, std::string> names;
  int incorrect = 0;
  int missing = 0;
  for (const auto& c : cmps) {
    if (!c) {
      ++missing;
    } else if (c->status == CmpStatus::kInvalid) {
      ++incorrect;
    } else {
      ++counts[c->id];
      names[c->id] = c->status == CmpStatus::kKnown && !c->name.empty()
                         ? c->name
                         : "unlisted CMP " + std::to_string(c->id);
    }
  }
  std::vector<CmpRow> rows;
  int others = 0;
  for (const auto& [id, n] : counts) {
    if (n >= threshold) {
      rows.push_back({CmpBucket::kNamed, id, names[id], n});
    } else {
      others += n;
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CmpRow& a, const CmpRow& b) { return a.sites > b.sites; });
  rows.push_back({CmpBucket::kOthers, std::nullopt, "others", others});
  rows.push_back(
      {CmpBucket::kIncorrectId, std::nullopt, "incorrect CMP ID", incorrect});
  rows.push_back({CmpBucket::kNoConsentString, std::nullopt,
                  "No consent string found", missing});
  return rows;
}

Json RatioToJson(const Ratio& r, int decimals = 1) {
  return {{"numerator", r.numerator},
          {"denominator", r.denominator},
          {"percent", r.Percent(decimals)}};
}

Ratio RatioFromJson(const Json& j, const std::string& path) {
  return {static_cast<int>(detail::IntField(j, "numerator", path)),
          static_cast<int>(detail::IntField(j, "denominator", path))};
}

Json CmpRowsToJson(const std::vector<CmpRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"bucket", CmpBucketName(r.bucket)},
                   {"cmp_id", r.cmp_id ? Json(*r.cmp_id) : Json(nullptr)},
                   {"label", r.label},
                   {"sites", r.sites}});
  }
  return out;
}

std::vector<CmpRow> CmpRowsFromJson(const Json& j, const std::string& path) {
  detail::AsArray(j, path);
  std::vector<CmpRow> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = detail::Path(path, i);
    CmpRow r;
    auto bucket = ParseCmpBucket(detail::StringField(j[i], "bucket", p));
    if (!bucket) detail::SchemaFail(p, "unknown CMP bucket");
    r.bucket = *bucket;
    if (auto id = detail::OptionalInt(j[i], "cmp_id", p)) {
      r.cmp_id = static_cast<int>(*id);
    }
    r.label = detail::StringField(j[i], "label", p);
    r.sites = static_cast<int>(detail::IntField(j[i], "sites", p));
    rows.push_back(std::move(r));
  }
  return rows;
}

FindingKind KindFromJson(const std::string& name, const std::string& path) {
  auto k = ParseFindingKind(name);
  if (!k) detail::SchemaFail(path, "unknown finding kind '" + name + "'");
  return *k;
}

Json ReportToJson(const AuditReport& r) {
  Json totals = Json::object();
  for (const auto& [kind, ratio] : r.totals) {
    Json j = RatioToJson(ratio);
    j["population"] = PopulationName(DenominatorFor(kind));
    totals[std::string(FindingKindName(kind))] = std::move(j);
  }
  Json tlds = Json::array();
  for (const auto& t : r.tlds) {
    Json kinds = Json::object();
    for (const auto& [kind, ratio] : t.kinds) {
      kinds[std::string(FindingKindName(kind))] = RatioToJson(ratio);
    }
    tlds.push_back({{"tld", t.tld},
                    {"sites", t.sites},
                    {"tcf_sites", t.tcf_sites},
                    {"kinds", std::move(kinds)}});
  }
  Json by_kind = Json::object();
  for (const auto& [kind, rows] : r.cmps_by_kind) {
    by_kind[std::string(FindingKindName(kind))] = CmpRowsToJson(rows);
  }
  Json top = Json::array();
  for (const auto& s : r.top_sites) {
    Json kinds = Json::array();
    for (FindingKind k : s.kinds) kinds.push_back(FindingKindName(k));
    top.push_back({{"domain", s.domain},
                   {"tranco_rank",
                    s.tranco_rank ? Json(*s.tranco_rank) : Json(nullptr)},
                   {"kinds", std::move(kinds)}});
  }
  Json trackers = Json::array();
  for (const auto& t : r.trackers) {
    trackers.push_back({{"phase", PhaseName(t.phase)},
                        {"sites", t.sites},
                        {"tracking_requests", t.tracking_requests},
                        {"total_third_party", t.total_third_party},
                        {"tracking_mean", std::round(t.TrackingMean() * 100) / 100},
                        {"third_party_mean",
                         std::round(t.ThirdPartyMean() * 100) / 100}});
  }
  Json notes = Json::object();
  for (const auto& [kind, n] : r.notes) notes[std::string(NoteKindName(kind))] = n;

  return {
      {"sites",
       {{"total", r.total_sites},
        {"tcf", r.tcf_sites},
        {"annotated", r.annotated_sites},
        {"opt_out", r.opt_out_sites}}},
      {"totals", std::move(totals)},
      {"any_violation", RatioToJson(r.any_violation, 2)},
      {"sub_threshold_non_respect", RatioToJson(r.sub_threshold_non_respect)},
      {"tlds", std::move(tlds)},
      {"cmps", CmpRowsToJson(r.cmps)},
      {"cmps_by_kind", std::move(by_kind)},
      {"top_sites", std::move(top)},
      {"trackers", std::move(trackers)},
      {"notes", std::move(notes)},
  };
}

std::string RenderCsv(const AuditReport& r) {
  std::string out = "tld,kind,numerator,denominator,percent\n";
  for (const auto& t : r.tlds) {
    for (FindingKind k : kAllFindingKinds) {
      auto it = t.kinds.find(k);
      const Ratio ratio = it == t.kinds.end() ? Ratio{} : it->second;
      out += t.tld + "," + std::string(FindingKindName(k)) + "," +
             std::to_string(ratio.numerator) + "," +
             std::to_string(ratio.denominator) + "," +
             FormatFixed(ratio.Percent(), 1) + "\n";
    }
  }
  return out;
}

std::string Cell(const Ratio& r, int decimals = 1) {
  return FormatFixed(r.Percent(decimals), decimals) + "% (" +
         std::to_string(r.numerator) + "/" + std::to_string(r.denominator) + ")";
}

void AppendCmpTable(std::string& out, const std::vector<CmpRow>& rows) {
  out += "| CMP | Sites |\n|---|---:|\n";
  for (const auto& row : rows) {
    out += "| " + row.label + " | " + std::to_string(row.sites) + " |\n";
  }
}

std::string RenderMarkdown(const AuditReport& r) {
  std::string out = "# Audit report\n\n";
  out += "Sites: " + std::to_string(r.total_sites) + " total, " +
         std::to_string(r.tcf_sites) + " with a TCF banner, " +
         std::to_string(r.annotated_sites) + " annotated, " +
         std::to_string(r.opt_out_sites) + " allowing refusal.\n\n";

  out += "## Suspected violations\n\n| Violation | Population | Share |\n|---|---|---:|\n";
  for (const auto& [kind, ratio] : r.totals) {
    out += "| " + std::string(FindingKindName(kind)) + " | " +
           std::string(PopulationName(DenominatorFor(kind))) + " | " +
           Cell(ratio) + " |\n";
  }
  out += "\nAt least one violation: " + Cell(r.any_violation, 2) + "\n";
  out += "Positive consent with 1 to 4 purposes after refusal (not counted): " +
         Cell(r.sub_threshold_non_respect) + "\n\n";

  out += "## By TLD\n\n| TLD | Sites | TCF |";
  std::string rule = "|---|---:|---:|";
  for (FindingKind k : kAllFindingKinds) {
    out += " " + std::string(FindingKindName(k)) + " |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  for (const auto& t : r.tlds) {
    out += "| " + t.tld + " | " + std::to_string(t.sites) + " | " +
           std::to_string(t.tcf_sites) + " |";
    for (FindingKind k : kAllFindingKinds) {
      auto it = t.kinds.find(k);
      out += " " + (it == t.kinds.end() ? std::string("-") : Cell(it->second)) + " |";
    }
    out += "\n";
  }

  out += "\n## CMPs\n\n";
  AppendCmpTable(out, r.cmps);
  for (const auto& [kind, rows] : r.cmps_by_kind) {
    out += "\n### " + std::string(FindingKindName(kind)) + "\n\n";
    AppendCmpTable(out, rows);
  }

  if (!r.top_sites.empty()) {
    out += "\n## Highest-ranked sites with findings\n\n| Rank | Domain | Findings |\n|---:|---|---|\n";
    for (const auto& s : r.top_sites) {
      std::string kinds;
      for (FindingKind k : s.kinds) {
        if (!kinds.empty()) kinds += ", ";
        kinds += FindingKindName(k);
      }
      out += "| " + (s.tranco_rank ? std::to_string(*s.tranco_rank) : "-") +
             " | " + s.domain + " | " + kinds + " |\n";
    }
  }

  if (!r.trackers.empty()) {
    out += "\n## Third-party requests per site\n\n| Phase | Sites | Tracking | All third-party |\n|---|---:|---:|---:|\n";
    for (const auto& t : r.trackers) {
      out += "| " + std::string(PhaseName(t.phase)) + " | " +
             std::to_string(t.sites) + " | " + FormatFixed(t.TrackingMean(), 2) +
             " | " + FormatFixed(t.ThirdPartyMean(), 2) + " |\n";
    }
  }

  if (!r.notes.empty()) {
    out += "\n## Notes\n\n";
    for (const auto& [kind, n] : r.notes) {
      out += "- " + std::string(NoteKindName(kind)) + ": " + std::to_string(n) +
             " sites\n";
    }
  }
  return out;
}

}  // namespace

double Ratio::Percent(int decimals) const {
  if (denominator <= 0) return 0.0;
  long long scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  // Half-up rounding in integers so 54.285714 lands on 54.29 exactly.
  const long long scaled = (200LL * scale * numerator + denominator) /
                           (2LL * denominator);
  return static_cast<double>(scaled) / static_cast<double>(scale);
}

Population DenominatorFor(FindingKind kind) {
  switch (kind) {
    case FindingKind::kNoWayToOptOut:
      return Population::kAnnotated;
    case FindingKind::kPreSelected:
    case FindingKind::kNonRespectOfChoice:
    case FindingKind::kSharedCookieNonRespect:
    case FindingKind::kUrlOnlyNonRespect:
      return Population::kOptOut;
    default:
      return Population::kTcf;
  }
}

std::string_view PopulationName(Population p) {
  switch (p) {
    case Population::kTcf: return "tcf";
    case Population::kAnnotated: return "annotated";
    case Population::kOptOut: return "opt_out";
  }
  return "";
}

double TrackerPhaseStats::TrackingMean() const {
  return sites ? static_cast<double>(tracking_requests) / sites : 0.0;
}

double TrackerPhaseStats::ThirdPartyMean() const {
  return sites ? static_cast<double>(total_third_party) / sites : 0.0;
}

AuditReport BuildReport(const AuditResult& audit, const ReportOptions& options) {
  std::unordered_map<std::string, const SiteSummary*> sites;
  for (const auto& s : audit.sites) {
    if (!sites.emplace(s.domain, &s).second) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "site '" + s.domain + "' appears twice in the audit");
    }
  }
  auto site_of = [&](const std::string& domain) -> const SiteSummary& {
    auto it = sites.find(domain);
    if (it == sites.end()) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "finding references unknown site '" + domain + "'");
    }
    return *it->second;
  };

  // First finding per (kind, site); later ones add nothing to the counts.
  std::map<FindingKind, std::map<std::string, const ViolationFinding*>> by_kind;
  for (const auto& f : audit.findings) {
    site_of(f.domain);
    by_kind[f.kind].emplace(f.domain, &f);
  }

  AuditReport r;
  for (const auto& s : audit.sites) {
    ++r.total_sites;
    r.tcf_sites += InPopulation(s, Population::kTcf);
    r.annotated_sites += InPopulation(s, Population::kAnnotated);
    r.opt_out_sites += InPopulation(s, Population::kOptOut);
  }

  auto ratio_over = [&](FindingKind kind, const std::string* tld) {
    const Population p = DenominatorFor(kind);
    Ratio ratio;
    for (const auto& s : audit.sites) {
      if ((tld && s.tld != *tld) || !InPopulation(s, p)) continue;
      ++ratio.denominator;
    }
    if (auto it = by_kind.find(kind); it != by_kind.end()) {
      for (const auto& [domain, f] : it->second) {
        const SiteSummary& s = site_of(domain);
        if ((tld && s.tld != *tld) || !InPopulation(s, p)) continue;
        ++ratio.numerator;
      }
    }
    return ratio;
  };

  for (FindingKind k : kAllFindingKinds) r.totals[k] = ratio_over(k, nullptr);

  std::set<std::string> core_sites;
  for (FindingKind k : kCoreFindingKinds) {
    if (auto it = by_kind.find(k); it != by_kind.end()) {
      for (const auto& [domain, f] : it->second) core_sites.insert(domain);
    }
  }
  r.any_violation.denominator = r.annotated_sites;
  for (const auto& domain : core_sites) {
    r.any_violation.numerator += InPopulation(site_of(domain), Population::kAnnotated);
  }

  std::map<NoteKind, std::set<std::string>> noted;
  for (const auto& n : audit.notes) {
    site_of(n.domain);
    noted[n.kind].insert(n.domain);
  }
  for (const auto& [kind, domains] : noted) r.notes[kind] = static_cast<int>(domains.size());
  r.sub_threshold_non_respect.denominator = r.opt_out_sites;
  if (auto it = noted.find(NoteKind::kSubThresholdNonRespect); it != noted.end()) {
    for (const auto& domain : it->second) {
      r.sub_threshold_non_respect.numerator +=
          InPopulation(site_of(domain), Population::kOptOut);
    }
  }

  std::set<std::string> tld_names;
  for (const auto& s : audit.sites) tld_names.insert(s.tld);
  for (const auto& tld : tld_names) {
    TldBreakdown t;
    t.tld = tld;
    for (const auto& s : audit.sites) {
      if (s.tld != tld) continue;
      ++t.sites;
      t.tcf_sites += s.tcf_banner_detected;
    }
    for (FindingKind k : kAllFindingKinds) t.kinds[k] = ratio_over(k, &tld);
    r.tlds.push_back(std::move(t));
  }

  std::vector<std::optional<CmpIdentity>> tcf_cmps;
  for (const auto& s : audit.sites) {
    if (s.tcf_banner_detected) tcf_cmps.push_back(s.cmp);
  }
  r.cmps = PartitionByCmp(tcf_cmps, options.cmp_threshold);
  for (const auto& [kind, domains] : by_kind) {
    std::vector<std::optional<CmpIdentity>> cmps;
    for (const auto& [domain, f] : domains) cmps.push_back(f->cmp);
    r.cmps_by_kind[kind] = PartitionByCmp(cmps, options.kind_cmp_threshold);
  }

  std::map<std::string, std::set<FindingKind>> kinds_per_site;
  for (const auto& [kind, domains] : by_kind) {
    for (const auto& [domain, f] : domains) kinds_per_site[domain].insert(kind);
  }
  for (const auto& [domain, kinds] : kinds_per_site) {
    r.top_sites.push_back({domain, site_of(domain).tranco_rank,
                           {kinds.begin(), kinds.end()}});
  }
  std::sort(r.top_sites.begin(), r.top_sites.end(),
            [](const RankedSite& a, const RankedSite& b) {
              if (a.tranco_rank.has_value() != b.tranco_rank.has_value()) {
                return a.tranco_rank.has_value();
              }
              if (a.tranco_rank != b.tranco_rank) return a.tranco_rank < b.tranco_rank;
              return a.domain < b.domain;
            });
  if (options.top_n >= 0 &&
      r.top_sites.size() > static_cast<std::size_t>(options.top_n)) {
    r.top_sites.resize(options.top_n);
  }

  std::map<Phase, TrackerPhaseStats> trackers;
  for (const auto& s : audit.sites) {
    if (!InPopulation(s, Population::kOptOut)) continue;
    for (const auto& [phase, count] : s.trackers) {
      TrackerPhaseStats& t = trackers[phase];
      t.phase = phase;
      ++t.sites;
      t.tracking_requests += count.tracking_requests;
      t.total_third_party += count.total_third_party;
    }
  }
  for (auto& [phase, t] : trackers) r.trackers.push_back(t);
  return r;
}

std::optional<ReportFormat> ParseReportFormat(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "md" || name == "markdown") return ReportFormat::kMarkdown;
  return std::nullopt;
}

std::string RenderReport(const AuditReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return ReportToJson(report).dump(2) + "\n";
    case ReportFormat::kCsv: return RenderCsv(report);
    case ReportFormat::kMarkdown: return RenderMarkdown(report);
  }
  return {};
}

AuditReport ParseReportJson(std::string_view text) {
  const Json j = detail::ParseJson(text, "report");
  AuditReport r;
  const Json& sites = detail::Field(j, "sites", "report");
  r.total_sites = static_cast<int>(detail::IntField(sites, "total", "sites"));
  r.tcf_sites = static_cast<int>(detail::IntField(sites, "tcf", "sites"));
  r.annotated_sites = static_cast<int>(detail::IntField(sites, "annotated", "sites"));
  r.opt_out_sites = static_cast<int>(detail::IntField(sites, "opt_out", "sites"));

  for (const auto& [name, value] : detail::Field(j, "totals", "report").items()) {
    const std::string path = "totals." + name;
    const FindingKind kind = KindFromJson(name, path);
    if (auto pop = detail::OptionalString(value, "population", path)) {
      if (ParsePopulation(*pop) != DenominatorFor(kind)) {
        detail::SchemaFail(path, "unexpected population '" + *pop + "'");
      }
    }
    r.totals[kind] = RatioFromJson(value, path);
  }
  r.any_violation =
      RatioFromJson(detail::Field(j, "any_violation", "report"), "any_violation");
  r.sub_threshold_non_respect =
      RatioFromJson(detail::Field(j, "sub_threshold_non_respect", "report"),
                    "sub_threshold_non_respect");

  const Json& tlds = detail::AsArray(detail::Field(j, "tlds", "report"), "tlds");
  for (std::size_t i = 0; i < tlds.size(); ++i) {
    const std::string path = detail::Path("tlds", i);
    TldBreakdown t;
    t.tld = detail::StringField(tlds[i], "tld", path);
    t.sites = static_cast<int>(detail::IntField(tlds[i], "sites", path));
    t.tcf_sites = static_cast<int>(detail::IntField(tlds[i], "tcf_sites", path));
    for (const auto& [name, value] : detail::Field(tlds[i], "kinds", path).items()) {
      t.kinds[KindFromJson(name, path)] = RatioFromJson(value, path + "." + name);
    }
    r.tlds.push_back(std::move(t));
  }

  r.cmps = CmpRowsFromJson(detail::Field(j, "cmps", "report"), "cmps");
  for (const auto& [name, value] :
       detail::Field(j, "cmps_by_kind", "report").items()) {
    r.cmps_by_kind[KindFromJson(name, "cmps_by_kind")] =
        CmpRowsFromJson(value, "cmps_by_kind." + name);
  }

  const Json& top =
      detail::AsArray(detail::Field(j, "top_sites", "report"), "top_sites");
  for (std::size_t i = 0; i < top.size(); ++i) {
    const std::string path = detail::Path("top_sites", i);
    RankedSite s;
    s.domain = detail::StringField(top[i], "domain", path);
    if (auto rank = detail::OptionalInt(top[i], "tranco_rank", path)) {
      s.tranco_rank = static_cast<int>(*rank);
    }
    for (const Json& k : detail::AsArray(detail::Field(top[i], "kinds", path), path)) {
      s.kinds.push_back(KindFromJson(detail::AsString(k, path), path));
    }
    r.top_sites.push_back(std::move(s));
  }

  const Json& trackers =
      detail::AsArray(detail::Field(j, "trackers", "report"), "trackers");
  for (std::size_t i = 0; i < trackers.size(); ++i) {
    const std::string path = detail::Path("trackers", i);
    TrackerPhaseStats t;
    auto phase = ParsePhase(detail::StringField(trackers[i], "phase", path));
    if (!phase) detail::SchemaFail(path, "unknown phase");
    t.phase = *phase;
    t.sites = static_cast<int>(detail::IntField(trackers[i], "sites", path));
    t.tracking_requests = detail::IntField(trackers[i], "tracking_requests", path);
    t.total_third_party = detail::IntField(trackers[i], "total_third_party", path);
    r.trackers.push_back(t);
  }

  for (const auto& [name, value] : detail::Field(j, "notes", "report").items()) {
    auto kind = ParseNoteKind(name);
    if (!kind) detail::SchemaFail("notes", "unknown note '" + name + "'");
    r.notes[*kind] = static_cast<int>(detail::AsInt(value, "notes." + name));
  }
  return r;
}

}  // namespace tcfaudit
