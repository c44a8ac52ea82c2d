// tcfaudit command-line tool. Talks to the library through the C API only.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcfaudit/tcfaudit.h"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

// Input problems (bad files, bad flags) exit 1; anything else exits 2.
struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void InputError(std::string message) {
  throw Failure{kExitInput, std::move(message)};
}

void Check(tcfa_status status) {
  if (status == TCFA_OK) return;
  const int code = (status == TCFA_OUT_OF_MEMORY || status == TCFA_INTERNAL)
                       ? kExitInternal
                       : kExitInput;
  throw Failure{code, tcfa_last_error()};
}

struct CString {
  char* ptr = nullptr;
  ~CString() { tcfa_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  ~Handle() { Free(ptr); }
};

using Consent = Handle<tcfa_consent, tcfa_consent_free>;
using Registry = Handle<tcfa_registry, tcfa_registry_free>;
using Trackers = Handle<tcfa_trackers, tcfa_trackers_free>;
using RedirectServer = Handle<tcfa_redirect_server, tcfa_redirect_server_free>;

std::string ReadInput(const std::string& path) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), {}};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) InputError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteOutput(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) InputError("cannot write " + path);
  out << content;
  if (!out.flush()) InputError("cannot write " + path);
}

// Snapshot files default to TCFAUDIT_SNAPSHOTS/<name> when the flag is absent.
std::optional<std::string> SnapshotPath(const std::string& flag_value,
                                        const char* default_name) {
  if (!flag_value.empty()) return flag_value;
  const char* dir = std::getenv("TCFAUDIT_SNAPSHOTS");
  if (!dir || !*dir) return std::nullopt;
  fs::path candidate = fs::path(dir) / default_name;
  if (!fs::exists(candidate)) return std::nullopt;
  return candidate.string();
}

struct SnapshotFlags {
  std::string gvl;
  std::string cmp_list;
  std::string trackers;
  std::string purposes;
  std::vector<int> invalid_cmp_ids;

  void Attach(CLI::App* app, bool with_trackers) {
    app->add_option("--gvl", gvl, "Global Vendor List snapshot (JSON)")
        ->check(CLI::ExistingFile);
    app->add_option("--cmp-list", cmp_list, "CMP list snapshot (JSON)")
        ->check(CLI::ExistingFile);
    app->add_option("--purposes", purposes, "Purpose names override (JSON)")
        ->check(CLI::ExistingFile);
    app->add_option("--invalid-cmp-ids", invalid_cmp_ids,
                    "CMP ids treated as invalid (default 0 1 4095)");
    if (with_trackers) {
      app->add_option("--trackers", trackers, "Tracker list (Disconnect JSON or domains)")
          ->check(CLI::ExistingFile);
    }
  }

  void LoadRegistry(Registry& out) const {
    const auto gvl_path = SnapshotPath(gvl, "vendorlist.json");
    const auto cmp_path = SnapshotPath(cmp_list, "cmp-list.json");
    if (!gvl_path) InputError("--gvl is required (or set TCFAUDIT_SNAPSHOTS)");
    if (!cmp_path) InputError("--cmp-list is required (or set TCFAUDIT_SNAPSHOTS)");
    const std::string gvl_doc = ReadInput(*gvl_path);
    const std::string cmp_doc = ReadInput(*cmp_path);
    std::string purposes_doc;
    if (!purposes.empty()) purposes_doc = ReadInput(purposes);

    tcfa_registry_options options;
    tcfa_registry_options_init(&options);
    if (!invalid_cmp_ids.empty()) {
      options.invalid_cmp_ids = invalid_cmp_ids.data();
      options.invalid_cmp_id_count = invalid_cmp_ids.size();
    }
    Check(tcfa_registry_load(gvl_doc.c_str(), cmp_doc.c_str(),
                             purposes.empty() ? nullptr : purposes_doc.c_str(), &options,
                             &out.ptr));
  }

  // Trackers are optional; returns false when none were given or found.
  bool LoadTrackers(Trackers& out) const {
    const auto path = SnapshotPath(trackers, "trackers.json");
    if (!path) return false;
    Check(tcfa_trackers_load(ReadInput(*path).c_str(), &out.ptr));
    return true;
  }
};

// ---- decode / encode --------------------------------------------------------

struct DecodeCmd {
  std::string raw;
  std::string zone = "UTC";
  bool json = false;

  void Attach(CLI::App& root) {
    auto* app = root.add_subcommand("decode", "Decode a consent string");
    app->add_option("string", raw, "Web-safe base64 consent string")->required();
    app->add_option("--zone", zone, "IANA time zone for rendered dates")
        ->capture_default_str();
    app->add_flag("--json", json, "Print JSON instead of text");
    app->final_callback([this] { Run(); });
  }

  void Run() const {
    Consent consent;
    Check(tcfa_consent_decode(raw.c_str(), &consent.ptr));
    CString out;
    if (json) {
      Check(tcfa_consent_to_json(consent.ptr, zone.c_str(), &out.ptr));
    } else {
      Check(tcfa_consent_format(consent.ptr, zone.c_str(), &out.ptr));
    }
    WriteOutput("-", out.str());
  }
};

struct EncodeCmd {
  std::string input;

  void Attach(CLI::App& root) {
    auto* app = root.add_subcommand("encode", "Encode consent JSON into a consent string");
    app->add_option("json", input, "Inline JSON object, a file path, or - for stdin")
        ->required();
    app->final_callback([this] { Run(); });
  }

  void Run() const {
    const std::string doc =
        (!input.empty() && input.front() == '{') ? input : ReadInput(input);
    Consent consent;
    Check(tcfa_consent_from_json(doc.c_str(), &consent.ptr));
    CString out;
    Check(tcfa_consent_encode(consent.ptr, &out.ptr));
    WriteOutput("-", out.str() + "\n");
  }
};

// ---- audit / report ---------------------------------------------------------

struct AuditCmd {
  std::string captures;
  std::string out = "-";
  std::string diagnostics;
  SnapshotFlags snapshots;
  bool strict = false;
  tcfa_audit_options options{};

  void Attach(CLI::App& root) {
    tcfa_audit_options_init(&options);
    auto* app = root.add_subcommand("audit", "Run the violation detectors over captures");
    app->add_option("--captures", captures, "Capture sessions (JSON lines)")
        ->required()
        ->check(CLI::ExistingFile);
    snapshots.Attach(app, true);
    app->add_option("--out", out, "Audit output (JSON lines); - for stdout");
    app->add_option("--diagnostics", diagnostics,
                    "Write rejected-line diagnostics here instead of stderr");
    app->add_option("--before-min", options.before_choice_min_purposes,
                    "Purposes needed for consent-before-choice")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--nonrespect-min", options.non_respect_min_purposes,
                    "Purposes needed for non-respect of choice")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--shared-cookie-min", options.shared_cookie_non_respect_min_purposes,
                    "Purposes needed for shared-cookie non-respect")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--threads", options.threads, "Worker threads (0 = all cores)");
    app->add_flag("--strict", strict, "Exit 1 if any capture line was rejected");
    app->final_callback([this] { Run(); });
  }

  void Run() const {
    Registry registry;
    snapshots.LoadRegistry(registry);
    Trackers trackers;
    const bool have_trackers = snapshots.LoadTrackers(trackers);
    const std::string corpus = ReadInput(captures);

    CString audit;
    CString diag;
    Check(tcfa_audit(corpus.c_str(), registry.ptr, have_trackers ? trackers.ptr : nullptr,
                     &options, &audit.ptr, &diag.ptr));
    WriteOutput(out, audit.str());

    const std::string d = diag.str();
    if (!diagnostics.empty()) {
      WriteOutput(diagnostics, d);
    } else if (!d.empty()) {
      std::cerr << d;
    }
    if (strict && d.find("\"level\":\"error\"") != std::string::npos) {
      InputError("some capture lines were rejected");
    }
  }
};

struct ReportCmd {
  std::string findings;
  std::string format = "json";
  std::string out = "-";
  tcfa_report_options options{};

  void Attach(CLI::App& root) {
    tcfa_report_options_init(&options);
    auto* app = root.add_subcommand("report", "Aggregate an audit into tables");
    app->add_option("--findings", findings, "Audit output of the audit subcommand")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--format", format, "json, csv or md")
        ->capture_default_str()
        ->check(CLI::IsMember({"json", "csv", "md", "markdown"}));
    app->add_option("--out", out, "Output path; - for stdout");
    app->add_option("--cmp-threshold", options.cmp_threshold,
                    "Sites needed for a CMP to get its own row")
        ->capture_default_str();
    app->add_option("--kind-cmp-threshold", options.kind_cmp_threshold,
                    "Sites needed per finding kind for a CMP row")
        ->capture_default_str();
    app->add_option("--top", options.top_n, "Highest-ranked violating sites to list")
        ->capture_default_str();
    app->final_callback([this] { Run(); });
  }

  void Run() const {
    tcfa_report_format fmt = TCFA_REPORT_JSON;
    if (format == "csv") fmt = TCFA_REPORT_CSV;
    if (format == "md" || format == "markdown") fmt = TCFA_REPORT_MARKDOWN;
    const std::string audit = ReadInput(findings);
    CString report;
    Check(tcfa_report(audit.c_str(), fmt, &options, &report.ptr));
    WriteOutput(out, report.str());
  }
};

// ---- simulate / select-targets ---------------------------------------------

struct SimulateCmd {
  std::string plan;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
  std::string manifest;
  SnapshotFlags snapshots;

  void Attach(CLI::App& root) {
    auto* app = root.add_subcommand("simulate", "Generate a synthetic capture corpus");
    app->add_option("--plan", plan, "Simulation plan (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Overrides the plan's seed");
    app->add_option("--out", out, "Corpus output (JSON lines); - for stdout");
    app->add_option("--manifest", manifest, "Write the expected-findings manifest here");
    snapshots.Attach(app, true);
    app->final_callback([this] { Run(); });
  }

  void Run() const {
    Registry registry;
    snapshots.LoadRegistry(registry);
    Trackers trackers;
    const bool have_trackers = snapshots.LoadTrackers(trackers);
    const std::string plan_doc = ReadInput(plan);

    CString corpus;
    CString expected;
    Check(tcfa_simulate(plan_doc.c_str(), seed.has_value(), seed.value_or(0), registry.ptr,
                        have_trackers ? trackers.ptr : nullptr, &corpus.ptr,
                        manifest.empty() ? nullptr : &expected.ptr));
    WriteOutput(out, corpus.str());
    if (!manifest.empty()) WriteOutput(manifest, expected.str());
  }
};

struct SelectTargetsCmd {
  std::string ranks;
  std::vector<std::string> tlds;
  int cap = 1000;
  std::string out = "-";

  void Attach(CLI::App& root) {
    auto* app = root.add_subcommand("select-targets", "Pick the top domains per TLD");
    app->add_option("--ranks", ranks, "Rank list CSV (rank,domain)")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--tlds", tlds, "TLDs, e.g. fr de co.uk")->required()->delimiter(',');
    app->add_option("--cap", cap, "Domains per TLD")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--out", out, "Output CSV; - for stdout");
    app->final_callback([this] { Run(); });
  }

  void Run() const {
    const std::string csv = ReadInput(ranks);
    std::vector<const char*> ptrs;
    for (const auto& t : tlds) ptrs.push_back(t.c_str());
    CString selected;
    Check(tcfa_select_targets(csv.c_str(), ptrs.data(), ptrs.size(), cap, &selected.ptr));
    WriteOutput(out, selected.str());
  }
};

// ---- network --------------------------------------------------------------

struct CheckAccessCmd {
  std::string domains_file;
  std::string out = "-";
  std::string user_agent = "tcfaudit";
  std::vector<std::string> resolve;
  tcfa_access_options options{};

  void Attach(CLI::App& root) {
    tcfa_access_options_init(&options);
    auto* app =
        root.add_subcommand("check-access", "Check robots.txt permission for each domain");
    app->add_option("--domains", domains_file, "One domain per line")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--out", out, "Output CSV (domain,result); - for stdout");
    app->add_option("--timeout-ms", options.timeout_ms, "Per-request timeout")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--attempts", options.attempts, "Timeouts tolerated per site")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--user-agent", user_agent, "User-Agent sent and matched in robots.txt")
        ->capture_default_str();
    app->add_option("--parallel", options.parallelism, "Sites checked concurrently")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--https-port", options.https_port)->capture_default_str();
    app->add_option("--http-port", options.http_port)->capture_default_str();
    app->add_option("--resolve", resolve, "host=address override (repeatable)");
    app->final_callback([this] { Run(); });
  }

  void Run() {
    std::vector<std::string> domains;
    std::istringstream in(ReadInput(domains_file));
    for (std::string line; std::getline(in, line);) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty() && line.front() != '#') domains.push_back(line);
    }

    std::vector<std::string> hosts;
    std::vector<std::string> addrs;
    for (const auto& entry : resolve) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size()) {
        InputError("--resolve expects host=address, got " + entry);
      }
      hosts.push_back(entry.substr(0, eq));
      addrs.push_back(entry.substr(eq + 1));
    }
    std::vector<const char*> host_ptrs;
    std::vector<const char*> addr_ptrs;
    for (std::size_t i = 0; i < hosts.size(); ++i) {
      host_ptrs.push_back(hosts[i].c_str());
      addr_ptrs.push_back(addrs[i].c_str());
    }
    options.user_agent = user_agent.c_str();
    options.resolve_hosts = host_ptrs.data();
    options.resolve_addrs = addr_ptrs.data();
    options.resolve_count = hosts.size();

    std::vector<const char*> ptrs;
    for (const auto& d : domains) ptrs.push_back(d.c_str());
    std::vector<tcfa_access> results(domains.size());
    Check(tcfa_check_access(ptrs.data(), ptrs.size(), &options, results.data()));

    std::string csv = "domain,result\n";
    for (std::size_t i = 0; i < domains.size(); ++i) {
      csv += domains[i] + "," + tcfa_access_name(results[i]) + "\n";
    }
    WriteOutput(out, csv);
  }
};

struct ServeRedirectCmd {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::string label = "mockcmp";
  std::vector<std::string> allowed_hosts;
  bool nonstandard = false;

  void Attach(CLI::App& root) {
    auto* app =
        root.add_subcommand("serve-redirect", "Run the mock CMP consent redirect endpoint");
    app->add_option("--port", port, "Listening port (0 picks one)")
        ->capture_default_str()
        ->check(CLI::Range(0, 65535));
    app->add_option("--bind", bind, "Listening address")->capture_default_str();
    app->add_option("--cmp-label", label, "consensu.org subdomain to impersonate")
        ->capture_default_str();
    app->add_option("--allow-host", allowed_hosts,
                    "Allowed redirect_uri host (repeatable; default ad.example, localhost, 127.0.0.1)");
    app->add_flag("--accept-nonstandard-param", nonstandard,
                  "Also pass through gdpr_consent_string");
    app->final_callback([this] { Run(); });
  }

  void Run() const {
    tcfa_redirect_options options;
    tcfa_redirect_options_init(&options);
    options.bind_address = bind.c_str();
    options.port = port;
    options.cmp_subdomain_label = label.c_str();
    std::vector<const char*> hosts;
    for (const auto& h : allowed_hosts) hosts.push_back(h.c_str());
    if (!hosts.empty()) {
      options.allowed_hosts = hosts.data();
      options.allowed_host_count = hosts.size();
    }
    options.accept_nonstandard_param = nonstandard;

    // Block the signals before the server thread exists so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    RedirectServer server;
    Check(tcfa_redirect_server_start(&options, &server.ptr));
    std::cout << "listening on http://" << bind << ":" << tcfa_redirect_server_port(server.ptr)
              << "/redirect" << std::endl;
    int received = 0;
    sigwait(&signals, &received);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit IAB TCF v1.1 consent behaviour of websites"};
  app.set_version_flag("--version", std::string(tcfa_version()));
  app.require_subcommand(1);

  DecodeCmd decode;
  EncodeCmd encode;
  AuditCmd audit;
  ReportCmd report;
  SimulateCmd simulate;
  SelectTargetsCmd select_targets;
  CheckAccessCmd check_access;
  ServeRedirectCmd serve_redirect;
  decode.Attach(app);
  encode.Attach(app);
  audit.Attach(app);
  report.Attach(app);
  simulate.Attach(app);
  select_targets.Attach(app);
  check_access.Attach(app);
  serve_redirect.Attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return kExitInput;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
