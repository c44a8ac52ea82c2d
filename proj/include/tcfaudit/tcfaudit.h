#ifndef TCFAUDIT_TCFAUDIT_H_
#define TCFAUDIT_TCFAUDIT_H_

/*
 * C interface to the tcfaudit library.
 *
 * Conventions:
 *   - Functions that can fail return tcfa_status; TCFA_OK is zero. On failure
 *     tcfa_last_error() describes the problem (per thread, valid until the
 *     next call on that thread).
 *   - Strings are NUL-terminated UTF-8. Strings returned through char**
 *     out-parameters are owned by the caller and released with tcfa_free().
 *   - Handles are opaque and released with their *_free function; passing
 *     NULL to a *_free function is a no-op.
 *   - Handles may be shared across threads for reading; free them once.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TCFA_API __declspec(dllexport)
#else
#define TCFA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tcfa_status {
  TCFA_OK = 0,
  TCFA_INVALID_ARGUMENT = 1,
  TCFA_MALFORMED_BASE64 = 2,
  TCFA_TRUNCATED_PAYLOAD = 3,
  TCFA_UNSUPPORTED_VERSION = 4,
  TCFA_NON_CANONICAL_PADDING = 5,
  TCFA_INVALID_RANGE_ENTRY = 6,
  TCFA_INVARIANT_VIOLATION = 7,
  TCFA_SCHEMA_ERROR = 8,
  TCFA_DUPLICATE_ID = 9,
  TCFA_NO_ANNOTATIONS = 10,
  TCFA_MISSING_PHASE = 11,
  TCFA_INCONSISTENT_INPUTS = 12,
  TCFA_INVALID_PLAN = 13,
  TCFA_MALFORMED_RANK_LINE = 14,
  TCFA_IO_ERROR = 15,
  TCFA_NETWORK_ERROR = 16,
  TCFA_OUT_OF_MEMORY = 98,
  TCFA_INTERNAL = 99
} tcfa_status;

TCFA_API const char* tcfa_version(void);
TCFA_API const char* tcfa_status_name(tcfa_status status);
TCFA_API const char* tcfa_last_error(void);
TCFA_API void tcfa_free(void* ptr);

/* ---- Consent strings ---------------------------------------------------- */

typedef struct tcfa_consent tcfa_consent;

TCFA_API tcfa_status tcfa_consent_decode(const char* raw, tcfa_consent** out);
/* Same fields as tcfa_consent_to_json produces. */
TCFA_API tcfa_status tcfa_consent_from_json(const char* json, tcfa_consent** out);
TCFA_API void tcfa_consent_free(tcfa_consent* consent);

TCFA_API int tcfa_consent_version(const tcfa_consent* c);
TCFA_API int64_t tcfa_consent_created(const tcfa_consent* c);      /* deciseconds */
TCFA_API int64_t tcfa_consent_last_updated(const tcfa_consent* c); /* deciseconds */
TCFA_API int tcfa_consent_cmp_id(const tcfa_consent* c);
TCFA_API int tcfa_consent_cmp_version(const tcfa_consent* c);
TCFA_API int tcfa_consent_screen(const tcfa_consent* c);
/* Two uppercase letters; owned by the handle. */
TCFA_API const char* tcfa_consent_language(const tcfa_consent* c);
TCFA_API int tcfa_consent_vendor_list_version(const tcfa_consent* c);
TCFA_API int tcfa_consent_max_vendor_id(const tcfa_consent* c);
TCFA_API int tcfa_consent_has_purpose(const tcfa_consent* c, int purpose_id);
TCFA_API int tcfa_consent_has_vendor(const tcfa_consent* c, int vendor_id);
/* Copies up to `capacity` ids in ascending order; returns the total count. */
TCFA_API size_t tcfa_consent_purposes(const tcfa_consent* c, int* ids, size_t capacity);
TCFA_API size_t tcfa_consent_vendors(const tcfa_consent* c, int* ids, size_t capacity);

TCFA_API tcfa_status tcfa_consent_encode(const tcfa_consent* c, char** out);
/* `zone` (IANA name, e.g. "UTC" or "Europe/Paris") adds rendered dates;
   NULL omits them. */
TCFA_API tcfa_status tcfa_consent_to_json(const tcfa_consent* c, const char* zone,
                                          char** out);
/* Multi-line human-readable rendering; `zone` NULL means UTC. */
TCFA_API tcfa_status tcfa_consent_format(const tcfa_consent* c, const char* zone,
                                         char** out);

/* ---- Registry and tracker list ------------------------------------------ */

typedef struct tcfa_registry tcfa_registry;
typedef struct tcfa_trackers tcfa_trackers;

typedef enum tcfa_cmp_status {
  TCFA_CMP_KNOWN = 0,
  TCFA_CMP_INVALID = 1,
  TCFA_CMP_UNKNOWN = 2
} tcfa_cmp_status;

typedef struct tcfa_registry_options {
  const int* invalid_cmp_ids; /* NULL: the defaults 0, 1 and 4095 */
  size_t invalid_cmp_id_count;
  int unknown_vendors_consent_based; /* default 1 */
} tcfa_registry_options;

TCFA_API void tcfa_registry_options_init(tcfa_registry_options* options);
/* gvl_json and cmp_list_json may each be NULL for an empty list;
   purposes_json NULL keeps the built-in purpose catalog. */
TCFA_API tcfa_status tcfa_registry_load(const char* gvl_json, const char* cmp_list_json,
                                        const char* purposes_json,
                                        const tcfa_registry_options* options,
                                        tcfa_registry** out);
TCFA_API void tcfa_registry_free(tcfa_registry* registry);
TCFA_API int tcfa_registry_max_vendor_id(const tcfa_registry* registry);
/* -1 when the vendor list carries no version. */
TCFA_API int tcfa_registry_gvl_version(const tcfa_registry* registry);
/* `name` may be NULL; it receives an empty string unless the CMP is known. */
TCFA_API tcfa_status tcfa_registry_identify_cmp(const tcfa_registry* registry, int cmp_id,
                                                tcfa_cmp_status* status, char** name);

/* Disconnect services.json or one domain per line. */
TCFA_API tcfa_status tcfa_trackers_load(const char* text, tcfa_trackers** out);
TCFA_API void tcfa_trackers_free(tcfa_trackers* trackers);
TCFA_API size_t tcfa_trackers_size(const tcfa_trackers* trackers);
TCFA_API int tcfa_trackers_match(const tcfa_trackers* trackers, const char* host);

/* ---- Audit and report --------------------------------------------------- */

typedef struct tcfa_audit_options {
  int before_choice_min_purposes;             /* default 1 */
  int non_respect_min_purposes;               /* default 5 */
  int shared_cookie_non_respect_min_purposes; /* default 1 */
  unsigned threads;                           /* 0: hardware concurrency */
} tcfa_audit_options;

TCFA_API void tcfa_audit_options_init(tcfa_audit_options* options);
/* Audits capture JSON lines. `trackers` and `options` may be NULL.
   out_audit receives the audit JSON lines (sites, findings, notes);
   out_diagnostics, when not NULL, receives one JSON line per rejected or
   suspicious capture line. */
TCFA_API tcfa_status tcfa_audit(const char* captures_jsonl, const tcfa_registry* registry,
                                const tcfa_trackers* trackers,
                                const tcfa_audit_options* options, char** out_audit,
                                char** out_diagnostics);

typedef enum tcfa_report_format {
  TCFA_REPORT_JSON = 0,
  TCFA_REPORT_CSV = 1,
  TCFA_REPORT_MARKDOWN = 2
} tcfa_report_format;

typedef struct tcfa_report_options {
  int cmp_threshold;      /* default 5 */
  int kind_cmp_threshold; /* default 3 */
  int top_n;              /* default 10 */
} tcfa_report_options;

TCFA_API void tcfa_report_options_init(tcfa_report_options* options);
TCFA_API tcfa_status tcfa_report(const char* audit_jsonl, tcfa_report_format format,
                                 const tcfa_report_options* options, char** out);

/* ---- Simulation and targets --------------------------------------------- */

/* Generates a capture corpus from a plan. When `override_seed` is non-zero,
   `seed` replaces the plan's seed. `trackers` may be NULL unless the plan
   asks for tracking requests. */
TCFA_API tcfa_status tcfa_simulate(const char* plan_json, int override_seed, uint64_t seed,
                                   const tcfa_registry* registry,
                                   const tcfa_trackers* trackers, char** out_corpus,
                                   char** out_manifest);

/* Output is CSV "rank,domain,tld" with a header line. */
TCFA_API tcfa_status tcfa_select_targets(const char* rank_csv, const char* const* tlds,
                                         size_t tld_count, int per_tld_cap, char** out);

/* ---- Network ------------------------------------------------------------ */

typedef enum tcfa_access {
  TCFA_ACCESS_ALLOWED = 0,
  TCFA_ACCESS_DISALLOWED_BY_ROBOTS = 1,
  TCFA_ACCESS_UNREACHABLE = 2
} tcfa_access;

typedef struct tcfa_access_options {
  int timeout_ms;         /* default 10000 */
  int attempts;           /* default 3 */
  const char* user_agent; /* default "tcfaudit" */
  int https_port;         /* default 443 */
  int http_port;          /* default 80 */
  const char* const* resolve_hosts; /* optional host -> address overrides */
  const char* const* resolve_addrs;
  size_t resolve_count;
  int parallelism; /* default 8 */
} tcfa_access_options;

TCFA_API void tcfa_access_options_init(tcfa_access_options* options);
TCFA_API const char* tcfa_access_name(tcfa_access access);
TCFA_API tcfa_status tcfa_robots_allows(const char* robots_txt, const char* user_agent,
                                        const char* path, int* allowed);
/* Fills results[i] for domains[i]. */
TCFA_API tcfa_status tcfa_check_access(const char* const* domains, size_t count,
                                       const tcfa_access_options* options,
                                       tcfa_access* results);

typedef struct tcfa_redirect_server tcfa_redirect_server;

typedef struct tcfa_redirect_options {
  const char* bind_address;        /* default "127.0.0.1" */
  int port;                        /* 0: any free port */
  const char* cmp_subdomain_label; /* default "mockcmp" */
  const char* const* allowed_hosts; /* NULL: ad.example, localhost, 127.0.0.1 */
  size_t allowed_host_count;
  int accept_nonstandard_param;
} tcfa_redirect_options;

TCFA_API void tcfa_redirect_options_init(tcfa_redirect_options* options);
/* Serves on a background thread until freed. */
TCFA_API tcfa_status tcfa_redirect_server_start(const tcfa_redirect_options* options,
                                                tcfa_redirect_server** out);
TCFA_API int tcfa_redirect_server_port(const tcfa_redirect_server* server);
TCFA_API void tcfa_redirect_server_free(tcfa_redirect_server* server);

#ifdef __cplusplus
}
#endif

#endif  /* TCFAUDIT_TCFAUDIT_H_ */
