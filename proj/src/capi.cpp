#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "tcfaudit/access.hpp"
#include "tcfaudit/capture.hpp"
#include "tcfaudit/consent.hpp"
#include "tcfaudit/engine.hpp"
#include "tcfaudit/error.hpp"
#include "tcfaudit/redirect_server.hpp"
#include "tcfaudit/registry.hpp"
#include "tcfaudit/report.hpp"
#include "tcfaudit/simulator.hpp"
#include "tcfaudit/targets.hpp"
#include "tcfaudit/tcfaudit.h"
#include "tcfaudit/trackers.hpp"

struct tcfa_consent {
  tcfaudit::ConsentString value;
};

struct tcfa_registry {
  tcfaudit::VendorRegistry value;
};

struct tcfa_trackers {
  tcfaudit::TrackerList value;
};

struct tcfa_redirect_server {
  explicit tcfa_redirect_server(tcfaudit::RedirectServerOptions options)
      : value(std::move(options)) {}
  tcfaudit::RedirectServer value;
};

namespace {

using tcfaudit::ErrorCode;

static_assert(static_cast<int>(ErrorCode::kInvalidArgument) == TCFA_INVALID_ARGUMENT);
static_assert(static_cast<int>(ErrorCode::kInvariantViolation) ==
              TCFA_INVARIANT_VIOLATION);
static_assert(static_cast<int>(ErrorCode::kMalformedRankLine) ==
              TCFA_MALFORMED_RANK_LINE);
static_assert(static_cast<int>(ErrorCode::kNetworkError) == TCFA_NETWORK_ERROR);

thread_local std::string last_error;

struct ArgumentError {
  const char* what;
};

void Require(bool condition, const char* what) {
  if (!condition) throw ArgumentError{what};
}

template <typename F>
tcfa_status Guard(F&& body) {
  try {
    body();
    last_error.clear();
    return TCFA_OK;
  } catch (const ArgumentError& e) {
    last_error = e.what;
    return TCFA_INVALID_ARGUMENT;
  } catch (const tcfaudit::Error& e) {
    last_error = std::string(tcfaudit::ErrorCodeName(e.code())) + ": " + e.what();
    return static_cast<tcfa_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TCFA_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    last_error = std::string("internal error: ") + e.what();
    return TCFA_INTERNAL;
  } catch (...) {
    last_error = "internal error";
    return TCFA_INTERNAL;
  }
}

char* Duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

size_t CopyIds(const std::set<int>& ids, int* out, size_t capacity) {
  size_t i = 0;
  for (int id : ids) {
    if (i >= capacity || !out) break;
    out[i++] = id;
  }
  return ids.size();
}

}  // namespace

extern "C" {

const char* tcfa_version(void) { return "0.1.0"; }

const char* tcfa_status_name(tcfa_status status) {
  switch (status) {
    case TCFA_OK: return "OK";
    case TCFA_OUT_OF_MEMORY: return "OutOfMemory";
    case TCFA_INTERNAL: return "Internal";
    default:
      if (status >= TCFA_INVALID_ARGUMENT && status <= TCFA_NETWORK_ERROR) {
        return tcfaudit::ErrorCodeName(static_cast<ErrorCode>(status)).data();
      }
      return "Unknown";
  }
}

const char* tcfa_last_error(void) { return last_error.c_str(); }

void tcfa_free(void* ptr) { std::free(ptr); }

// ---- Consent ---------------------------------------------------------------

tcfa_status tcfa_consent_decode(const char* raw, tcfa_consent** out) {
  return Guard([&] {
    Require(raw && out, "raw and out must not be NULL");
    *out = nullptr;
    *out = new tcfa_consent{tcfaudit::DecodeConsent(raw)};
  });
}

tcfa_status tcfa_consent_from_json(const char* json, tcfa_consent** out) {
  return Guard([&] {
    Require(json && out, "json and out must not be NULL");
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      throw tcfaudit::Error(ErrorCode::kSchemaError, e.what());
    }
    *out = new tcfa_consent{tcfaudit::ConsentFromJson(j)};
  });
}

void tcfa_consent_free(tcfa_consent* consent) { delete consent; }

int tcfa_consent_version(const tcfa_consent* c) { return c ? c->value.version : 0; }
int64_t tcfa_consent_created(const tcfa_consent* c) { return c ? c->value.created : 0; }
int64_t tcfa_consent_last_updated(const tcfa_consent* c) {
  return c ? c->value.last_updated : 0;
}
int tcfa_consent_cmp_id(const tcfa_consent* c) { return c ? c->value.cmp_id : 0; }
int tcfa_consent_cmp_version(const tcfa_consent* c) {
  return c ? c->value.cmp_version : 0;
}
int tcfa_consent_screen(const tcfa_consent* c) { return c ? c->value.consent_screen : 0; }
const char* tcfa_consent_language(const tcfa_consent* c) {
  return c ? c->value.consent_language.c_str() : "";
}
int tcfa_consent_vendor_list_version(const tcfa_consent* c) {
  return c ? c->value.vendor_list_version : 0;
}
int tcfa_consent_max_vendor_id(const tcfa_consent* c) {
  return c ? c->value.max_vendor_id : 0;
}
int tcfa_consent_has_purpose(const tcfa_consent* c, int purpose_id) {
  return c && c->value.allowed_purposes.contains(purpose_id);
}
int tcfa_consent_has_vendor(const tcfa_consent* c, int vendor_id) {
  return c && c->value.allowed_vendors.contains(vendor_id);
}
size_t tcfa_consent_purposes(const tcfa_consent* c, int* ids, size_t capacity) {
  return c ? CopyIds(c->value.allowed_purposes, ids, capacity) : 0;
}
size_t tcfa_consent_vendors(const tcfa_consent* c, int* ids, size_t capacity) {
  return c ? CopyIds(c->value.allowed_vendors, ids, capacity) : 0;
}

tcfa_status tcfa_consent_encode(const tcfa_consent* c, char** out) {
  return Guard([&] {
    Require(c && out, "consent and out must not be NULL");
    *out = Duplicate(tcfaudit::EncodeConsent(c->value));
  });
}

tcfa_status tcfa_consent_to_json(const tcfa_consent* c, const char* zone, char** out) {
  return Guard([&] {
    Require(c && out, "consent and out must not be NULL");
    std::optional<std::string_view> z;
    if (zone) z = zone;
    *out = Duplicate(tcfaudit::ConsentToJson(c->value, z).dump(2) + "\n");
  });
}

tcfa_status tcfa_consent_format(const tcfa_consent* c, const char* zone, char** out) {
  return Guard([&] {
    Require(c && out, "consent and out must not be NULL");
    *out = Duplicate(tcfaudit::FormatConsent(c->value, zone ? zone : "UTC"));
  });
}

// ---- Registry and trackers ---------------------------------------------------

void tcfa_registry_options_init(tcfa_registry_options* options) {
  if (!options) return;
  options->invalid_cmp_ids = nullptr;
  options->invalid_cmp_id_count = 0;
  options->unknown_vendors_consent_based = 1;
}

tcfa_status tcfa_registry_load(const char* gvl_json, const char* cmp_list_json,
                               const char* purposes_json,
                               const tcfa_registry_options* options,
                               tcfa_registry** out) {
  return Guard([&] {
    Require(out != nullptr, "out must not be NULL");
    *out = nullptr;
    tcfaudit::RegistryOptions opts;
    if (options) {
      if (options->invalid_cmp_ids) {
        opts.invalid_cmp_ids.clear();
        opts.invalid_cmp_ids.insert(options->invalid_cmp_ids,
                                    options->invalid_cmp_ids + options->invalid_cmp_id_count);
      }
      opts.unknown_vendors_consent_based = options->unknown_vendors_consent_based != 0;
    }
    auto registry = std::make_unique<tcfa_registry>(
        tcfa_registry{tcfaudit::VendorRegistry(opts)});
    if (gvl_json) registry->value.Merge(tcfaudit::LoadVendorList(gvl_json));
    if (cmp_list_json) registry->value.Merge(tcfaudit::LoadCmpList(cmp_list_json));
    if (purposes_json) {
      registry->value.OverridePurposes(tcfaudit::LoadPurposes(purposes_json));
    }
    *out = registry.release();
  });
}

void tcfa_registry_free(tcfa_registry* registry) { delete registry; }

int tcfa_registry_max_vendor_id(const tcfa_registry* registry) {
  return registry ? registry->value.max_vendor_id() : 0;
}

int tcfa_registry_gvl_version(const tcfa_registry* registry) {
  return registry ? registry->value.gvl_version().value_or(-1) : -1;
}

tcfa_status tcfa_registry_identify_cmp(const tcfa_registry* registry, int cmp_id,
                                       tcfa_cmp_status* status, char** name) {
  return Guard([&] {
    Require(registry && status, "registry and status must not be NULL");
    const tcfaudit::CmpIdentity id = registry->value.IdentifyCmp(cmp_id);
    *status = static_cast<tcfa_cmp_status>(id.status);
    if (name) *name = Duplicate(id.name);
  });
}

tcfa_status tcfa_trackers_load(const char* text, tcfa_trackers** out) {
  return Guard([&] {
    Require(text && out, "text and out must not be NULL");
    *out = nullptr;
    *out = new tcfa_trackers{tcfaudit::TrackerList::Parse(text)};
  });
}

void tcfa_trackers_free(tcfa_trackers* trackers) { delete trackers; }

size_t tcfa_trackers_size(const tcfa_trackers* trackers) {
  return trackers ? trackers->value.size() : 0;
}

int tcfa_trackers_match(const tcfa_trackers* trackers, const char* host) {
  return trackers && host && trackers->value.Matches(host);
}

// ---- Audit and report --------------------------------------------------------

void tcfa_audit_options_init(tcfa_audit_options* options) {
  if (!options) return;
  const tcfaudit::EngineOptions defaults;
  options->before_choice_min_purposes = defaults.before_choice_min_purposes;
  options->non_respect_min_purposes = defaults.non_respect_min_purposes;
  options->shared_cookie_non_respect_min_purposes =
      defaults.shared_cookie_non_respect_min_purposes;
  options->threads = defaults.threads;
}

tcfa_status tcfa_audit(const char* captures_jsonl, const tcfa_registry* registry,
                       const tcfa_trackers* trackers, const tcfa_audit_options* options,
                       char** out_audit, char** out_diagnostics) {
  return Guard([&] {
    Require(captures_jsonl && registry && out_audit,
            "captures, registry and out_audit must not be NULL");
    *out_audit = nullptr;
    if (out_diagnostics) *out_diagnostics = nullptr;

    tcfaudit::EngineOptions opts;
    if (options) {
      Require(options->before_choice_min_purposes >= 1 &&
                  options->non_respect_min_purposes >= 1 &&
                  options->shared_cookie_non_respect_min_purposes >= 1,
              "purpose thresholds must be at least 1");
      opts.before_choice_min_purposes = options->before_choice_min_purposes;
      opts.non_respect_min_purposes = options->non_respect_min_purposes;
      opts.shared_cookie_non_respect_min_purposes =
          options->shared_cookie_non_respect_min_purposes;
      opts.threads = options->threads;
    }
    const tcfaudit::LoadResult loaded = tcfaudit::LoadSessions(captures_jsonl);
    const tcfaudit::ViolationEngine engine(registry->value, opts,
                                           trackers ? &trackers->value : nullptr);
    const std::string audit = tcfaudit::SerializeAudit(engine.Audit(loaded.records));

    std::string diagnostics;
    auto emit = [&](const char* level, const tcfaudit::LoadIssue& issue) {
      diagnostics += nlohmann::json{{"level", level},
                                    {"line", issue.line},
                                    {"message", issue.message}}
                         .dump() +
                     "\n";
    };
    for (const auto& e : loaded.errors) emit("error", e);
    for (const auto& w : loaded.warnings) emit("warning", w);

    char* audit_copy = Duplicate(audit);
    if (out_diagnostics) {
      try {
        *out_diagnostics = Duplicate(diagnostics);
      } catch (...) {
        std::free(audit_copy);
        throw;
      }
    }
    *out_audit = audit_copy;
  });
}

void tcfa_report_options_init(tcfa_report_options* options) {
  if (!options) return;
  const tcfaudit::ReportOptions defaults;
  options->cmp_threshold = defaults.cmp_threshold;
  options->kind_cmp_threshold = defaults.kind_cmp_threshold;
  options->top_n = defaults.top_n;
}

tcfa_status tcfa_report(const char* audit_jsonl, tcfa_report_format format,
                        const tcfa_report_options* options, char** out) {
  return Guard([&] {
    Require(audit_jsonl && out, "audit and out must not be NULL");
    Require(format >= TCFA_REPORT_JSON && format <= TCFA_REPORT_MARKDOWN,
            "unknown report format");
    tcfaudit::ReportOptions opts;
    if (options) {
      opts.cmp_threshold = options->cmp_threshold;
      opts.kind_cmp_threshold = options->kind_cmp_threshold;
      opts.top_n = options->top_n;
    }
    const tcfaudit::AuditReport report =
        tcfaudit::BuildReport(tcfaudit::ParseAudit(audit_jsonl), opts);
    *out = Duplicate(
        tcfaudit::RenderReport(report, static_cast<tcfaudit::ReportFormat>(format)));
  });
}

// ---- Simulation and targets ------------------------------------------------

tcfa_status tcfa_simulate(const char* plan_json, int override_seed, uint64_t seed,
                          const tcfa_registry* registry, const tcfa_trackers* trackers,
                          char** out_corpus, char** out_manifest) {
  return Guard([&] {
    Require(plan_json && registry && out_corpus,
            "plan, registry and out_corpus must not be NULL");
    *out_corpus = nullptr;
    if (out_manifest) *out_manifest = nullptr;
    tcfaudit::SimulationPlan plan = tcfaudit::ParsePlan(plan_json);
    if (override_seed) plan.seed = seed;
    const tcfaudit::Simulation sim = tcfaudit::SimulateCorpus(
        plan, registry->value, trackers ? &trackers->value : nullptr);
    char* corpus = Duplicate(tcfaudit::SerializeSessions(sim.records));
    if (out_manifest) {
      try {
        *out_manifest = Duplicate(tcfaudit::SerializeManifest(sim.manifest));
      } catch (...) {
        std::free(corpus);
        throw;
      }
    }
    *out_corpus = corpus;
  });
}

tcfa_status tcfa_select_targets(const char* rank_csv, const char* const* tlds,
                                size_t tld_count, int per_tld_cap, char** out) {
  return Guard([&] {
    Require(rank_csv && out && (tlds || tld_count == 0),
            "rank list, tlds and out must not be NULL");
    std::vector<std::string> wanted;
    for (size_t i = 0; i < tld_count; ++i) {
      Require(tlds[i] != nullptr, "TLD entries must not be NULL");
      wanted.emplace_back(tlds[i]);
    }
    std::string csv = "rank,domain,tld\n";
    for (const auto& d : tcfaudit::SelectTargets(rank_csv, wanted, per_tld_cap)) {
      csv += std::to_string(d.rank) + "," + d.domain + "," + d.tld + "\n";
    }
    *out = Duplicate(csv);
  });
}

// ---- Network ---------------------------------------------------------------

void tcfa_access_options_init(tcfa_access_options* options) {
  if (!options) return;
  const tcfaudit::AccessOptions defaults;
  options->timeout_ms = static_cast<int>(defaults.timeout.count());
  options->attempts = defaults.attempts;
  options->user_agent = nullptr;
  options->https_port = defaults.https_port;
  options->http_port = defaults.http_port;
  options->resolve_hosts = nullptr;
  options->resolve_addrs = nullptr;
  options->resolve_count = 0;
  options->parallelism = 8;
}

const char* tcfa_access_name(tcfa_access access) {
  return tcfaudit::AccessResultName(static_cast<tcfaudit::AccessResult>(access)).data();
}

tcfa_status tcfa_robots_allows(const char* robots_txt, const char* user_agent,
                               const char* path, int* allowed) {
  return Guard([&] {
    Require(robots_txt && user_agent && allowed,
            "robots_txt, user_agent and allowed must not be NULL");
    *allowed = tcfaudit::RobotsAllows(robots_txt, user_agent, path ? path : "/");
  });
}

tcfa_status tcfa_check_access(const char* const* domains, size_t count,
                              const tcfa_access_options* options, tcfa_access* results) {
  return Guard([&] {
    Require((domains && results) || count == 0, "domains and results must not be NULL");
    tcfaudit::AccessOptions opts;
    int parallelism = 8;
    if (options) {
      Require(options->timeout_ms > 0 && options->attempts > 0,
              "timeout and attempts must be positive");
      opts.timeout = std::chrono::milliseconds(options->timeout_ms);
      opts.attempts = options->attempts;
      if (options->user_agent) opts.user_agent = options->user_agent;
      opts.https_port = options->https_port;
      opts.http_port = options->http_port;
      for (size_t i = 0; i < options->resolve_count; ++i) {
        Require(options->resolve_hosts && options->resolve_addrs &&
                    options->resolve_hosts[i] && options->resolve_addrs[i],
                "resolve entries must not be NULL");
        opts.resolve[options->resolve_hosts[i]] = options->resolve_addrs[i];
      }
      parallelism = options->parallelism;
    }
    std::vector<std::string> list;
    for (size_t i = 0; i < count; ++i) {
      Require(domains[i] != nullptr, "domain entries must not be NULL");
      list.emplace_back(domains[i]);
    }
    const auto out = tcfaudit::CheckSitesAccess(list, opts, parallelism);
    for (size_t i = 0; i < count; ++i) results[i] = static_cast<tcfa_access>(out[i]);
  });
}

void tcfa_redirect_options_init(tcfa_redirect_options* options) {
  if (!options) return;
  options->bind_address = nullptr;
  options->port = 0;
  options->cmp_subdomain_label = nullptr;
  options->allowed_hosts = nullptr;
  options->allowed_host_count = 0;
  options->accept_nonstandard_param = 0;
}

tcfa_status tcfa_redirect_server_start(const tcfa_redirect_options* options,
                                       tcfa_redirect_server** out) {
  return Guard([&] {
    Require(out != nullptr, "out must not be NULL");
    *out = nullptr;
    tcfaudit::RedirectServerOptions opts;
    if (options) {
      if (options->bind_address) opts.bind_address = options->bind_address;
      opts.port = options->port;
      if (options->cmp_subdomain_label) {
        opts.cmp_subdomain_label = options->cmp_subdomain_label;
      }
      if (options->allowed_hosts) {
        opts.allowed_hosts.clear();
        for (size_t i = 0; i < options->allowed_host_count; ++i) {
          Require(options->allowed_hosts[i] != nullptr, "allowed hosts must not be NULL");
          opts.allowed_hosts.insert(options->allowed_hosts[i]);
        }
      }
      opts.accept_nonstandard_param = options->accept_nonstandard_param != 0;
    }
    auto server = std::make_unique<tcfa_redirect_server>(std::move(opts));
    server->value.Start();
    *out = server.release();
  });
}

int tcfa_redirect_server_port(const tcfa_redirect_server* server) {
  return server ? server->value.port() : -1;
}

void tcfa_redirect_server_free(tcfa_redirect_server* server) { delete server; }

}  // extern "C"
