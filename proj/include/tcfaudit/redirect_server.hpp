#pragma once

// A stand-in for a CMP's consent redirect endpoint: it reads the shared
// euconsent cookie and bounces the browser to an ad URL carrying it.

#include <memory>
#include <set>
#include <string>

namespace tcfaudit {

struct RedirectServerOptions {
  std::string bind_address = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  // Subdomain of consensu.org the mock impersonates; sent back in the
  // X-Consent-Domain header.
  std::string cmp_subdomain_label = "mockcmp";
  // Hosts (and their subdomains) allowed as redirect_uri targets.
  std::set<std::string> allowed_hosts{"ad.example", "localhost", "127.0.0.1"};
  // Also accept gdpr_consent_string, as some CMPs send, for the passthrough.
  bool accept_nonstandard_param = false;
};

// GET /redirect?redirect_uri=<url>[&gdpr=<0|1>][&gdpr_consent=<string>]
//   302, Location = redirect_uri plus gdpr (echoed) and gdpr_consent, taken
//   from the euconsent cookie, else from the passthrough parameter.
//   400 when redirect_uri is missing, unparsable or not allow-listed.
class RedirectServer {
 public:
  explicit RedirectServer(RedirectServerOptions options);
  ~RedirectServer();
  RedirectServer(const RedirectServer&) = delete;
  RedirectServer& operator=(const RedirectServer&) = delete;

  // Binds and serves on a background thread. Throws Error{kNetworkError}.
  void Start();
  // Serves on the calling thread until Stop() is called elsewhere.
  void Run();
  void Stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tcfaudit
