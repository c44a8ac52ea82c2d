#include "tcfaudit/redirect_server.hpp"

#include <thread>

#include <httplib.h>

#include "tcfaudit/domain.hpp"
#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

std::optional<std::string> CookieValue(const std::string& header, std::string_view name) {
  std::string_view rest = header;
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    std::string_view pair = rest.substr(0, semi);
    rest.remove_prefix(semi == std::string_view::npos ? rest.size() : semi + 1);
    while (!pair.empty() && pair.front() == ' ') pair.remove_prefix(1);
    const auto eq = pair.find('=');
    if (eq == std::string_view::npos || pair.substr(0, eq) != name) continue;
    std::string_view value = pair.substr(eq + 1);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    return std::string(value);
  }
  return std::nullopt;
}

bool HostAllowed(const std::string& host, const std::set<std::string>& allowed) {
  for (const std::string& a : allowed) {
    if (host == a) return true;
    if (host.size() > a.size() && host.ends_with(a) &&
        host[host.size() - a.size() - 1] == '.') {
      return true;
    }
  }
  return false;
}

}  // namespace

struct RedirectServer::Impl {
  RedirectServerOptions options;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  void Handle(const httplib::Request& req, httplib::Response& res) {
    res.set_header("X-Consent-Domain", options.cmp_subdomain_label + ".consensu.org");
    res.set_header("Cache-Control", "no-store");
    auto bad_request = [&](const std::string& why) {
      res.status = 400;
      res.set_content(why + "\n", "text/plain");
    };

    if (!req.has_param("redirect_uri")) return bad_request("missing redirect_uri");
    const std::string target = req.get_param_value("redirect_uri");
    const bool http = target.starts_with("http://") || target.starts_with("https://");
    const std::string host = http ? HostOf(target) : std::string();
    if (host.empty()) return bad_request("redirect_uri is not an absolute http(s) URL");
    if (!HostAllowed(host, options.allowed_hosts)) {
      return bad_request("redirect_uri host is not allow-listed");
    }

    std::optional<std::string> consent;
    if (req.has_header("Cookie")) {
      consent = CookieValue(req.get_header_value("Cookie"), "euconsent");
    }
    if (!consent && req.has_param("gdpr_consent")) {
      consent = req.get_param_value("gdpr_consent");
    }
    if (!consent && options.accept_nonstandard_param &&
        req.has_param("gdpr_consent_string")) {
      consent = req.get_param_value("gdpr_consent_string");
    }

    std::string location = target;
    const auto fragment = location.find('#');
    const std::string tail = fragment == std::string::npos ? "" : location.substr(fragment);
    if (fragment != std::string::npos) location.resize(fragment);
    auto append = [&](const std::string& key, const std::string& value) {
      location += location.find('?') == std::string::npos ? '?' : '&';
      location += key + "=" + UrlEncode(value);
    };
    if (req.has_param("gdpr")) append("gdpr", req.get_param_value("gdpr"));
    if (consent) append("gdpr_consent", *consent);
    location += tail;

    res.status = 302;
    res.set_header("Location", location);
  }
};

RedirectServer::RedirectServer(RedirectServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  // httplib's defaults add SO_REUSEPORT, which lets a second server share a
  // busy port silently.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  impl_->server.Get("/redirect", [this](const httplib::Request& req,
                                        httplib::Response& res) {
    impl_->Handle(req, res);
  });
}

RedirectServer::~RedirectServer() { Stop(); }

void RedirectServer::Start() {
  Impl& s = *impl_;
  if (s.options.port == 0) {
    s.port = s.server.bind_to_any_port(s.options.bind_address);
  } else if (s.server.bind_to_port(s.options.bind_address, s.options.port)) {
    s.port = s.options.port;
  } else {
    s.port = -1;
  }
  if (s.port <= 0) {
    throw Error(ErrorCode::kNetworkError,
                "cannot bind " + s.options.bind_address + ":" +
                    std::to_string(s.options.port));
  }
  s.thread = std::thread([&s] { s.server.listen_after_bind(); });
  s.server.wait_until_ready();
}

void RedirectServer::Run() {
  if (!impl_->thread.joinable()) Start();
  impl_->thread.join();
}

void RedirectServer::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable() &&
      impl_->thread.get_id() != std::this_thread::get_id()) {
    impl_->thread.join();
  }
}

int RedirectServer::port() const { return impl_->port; }

}  // namespace tcfaudit
