#include "tcfaudit/access.hpp"

#include <netdb.h>
#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include <httplib.h>

#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

struct RobotsRule {
  bool allow = false;
  std::string pattern;
};

struct RobotsGroup {
  std::vector<std::string> agents;
  std::vector<RobotsRule> rules;
};

std::vector<RobotsGroup> ParseRobots(std::string_view text) {
  std::vector<RobotsGroup> groups;
  bool in_rules = false;
  while (!text.empty()) {
    const auto nl = text.find_first_of("\r\n");
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    line = Trim(line.substr(0, line.find('#')));
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key = Lower(Trim(line.substr(0, colon)));
    const std::string_view value = Trim(line.substr(colon + 1));

    if (key == "user-agent") {
      if (groups.empty() || in_rules) {
        groups.emplace_back();
        in_rules = false;
      }
      groups.back().agents.push_back(Lower(value));
    } else if (key == "allow" || key == "disallow") {
      if (groups.empty()) continue;  // rules before any User-agent line
      in_rules = true;
      // "Disallow:" with no path allows everything, i.e. adds no rule.
      if (value.empty()) continue;
      groups.back().rules.push_back({key == "allow", std::string(value)});
    }
  }
  return groups;
}

bool GlobPrefix(std::string_view pattern, std::string_view path, bool anchored) {
  while (!pattern.empty()) {
    if (pattern.front() == '*') {
      while (!pattern.empty() && pattern.front() == '*') pattern.remove_prefix(1);
      if (pattern.empty()) return true;
      for (std::size_t k = 0; k <= path.size(); ++k) {
        if (GlobPrefix(pattern, path.substr(k), anchored)) return true;
      }
      return false;
    }
    if (path.empty() || pattern.front() != path.front()) return false;
    pattern.remove_prefix(1);
    path.remove_prefix(1);
  }
  return !anchored || path.empty();
}

bool RuleMatches(std::string_view pattern, std::string_view path) {
  const bool anchored = !pattern.empty() && pattern.back() == '$';
  if (anchored) pattern.remove_suffix(1);
  return GlobPrefix(pattern, path, anchored);
}

enum class FetchKind { kResponse, kTimeout, kNetworkError };

struct FetchResult {
  FetchKind kind = FetchKind::kNetworkError;
  int status = 0;
  std::string body;
};

bool Resolves(const std::string& host, const AccessOptions& options) {
  if (options.resolve.contains(host)) return true;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const int rc = getaddrinfo(host.c_str(), nullptr, &hints, &result);
  if (result) freeaddrinfo(result);
  return rc == 0;
}

FetchResult FetchRobots(const std::string& scheme, const std::string& host,
                        const AccessOptions& options) {
  const int port = scheme == "https" ? options.https_port : options.http_port;
  httplib::Client client(scheme + "://" + host + ":" + std::to_string(port));
  if (auto it = options.resolve.find(host); it != options.resolve.end()) {
    client.set_hostname_addr_map({{host, it->second}});
  }
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  client.set_write_timeout(options.timeout);
  client.set_follow_location(true);
  // Only robots.txt is read; a bad certificate should not hide it.
  client.enable_server_certificate_verification(false);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Get("/robots.txt", {{"User-Agent", options.user_agent}});
  if (res) return {FetchKind::kResponse, res->status, res->body};

  // Read timeouts surface as plain read errors, so elapsed time decides.
  const auto elapsed = std::chrono::steady_clock::now() - start;
  if (res.error() == httplib::Error::ConnectionTimeout ||
      elapsed >= options.timeout * 9 / 10) {
    return {FetchKind::kTimeout, 0, {}};
  }
  return {FetchKind::kNetworkError, 0, {}};
}

AccessResult Interpret(const FetchResult& f, const AccessOptions& options) {
  if (f.status >= 200 && f.status < 300) {
    return RobotsAllows(f.body, options.user_agent)
               ? AccessResult::kAllowed
               : AccessResult::kDisallowedByRobots;
  }
  if (f.status == 401 || f.status == 403 || f.status >= 500) {
    return AccessResult::kDisallowedByRobots;
  }
  return AccessResult::kAllowed;
}

}  // namespace

std::string_view AccessResultName(AccessResult r) {
  switch (r) {
    case AccessResult::kAllowed: return "Allowed";
    case AccessResult::kDisallowedByRobots: return "DisallowedByRobots";
    case AccessResult::kUnreachable: return "Unreachable";
  }
  return "";
}

bool RobotsAllows(std::string_view robots_txt, std::string_view user_agent,
                  std::string_view path) {
  const std::vector<RobotsGroup> groups = ParseRobots(robots_txt);
  std::string token = Lower(user_agent.substr(0, user_agent.find_first_of("/ ")));

  std::vector<const RobotsRule*> specific;
  std::vector<const RobotsRule*> wildcard;
  for (const RobotsGroup& g : groups) {
    bool named = false;
    bool star = false;
    for (const std::string& agent : g.agents) {
      if (agent == "*") {
        star = true;
      } else if (!agent.empty() && token.find(agent) != std::string::npos) {
        named = true;
      }
    }
    for (const RobotsRule& r : g.rules) {
      if (named) specific.push_back(&r);
      if (star) wildcard.push_back(&r);
    }
  }
  const auto& rules = specific.empty() ? wildcard : specific;

  std::size_t best = 0;
  bool matched = false;
  bool allow = true;
  for (const RobotsRule* r : rules) {
    if (!RuleMatches(r->pattern, path)) continue;
    const std::size_t len = r->pattern.size();
    if (!matched || len > best) {
      allow = r->allow;
      best = len;
      matched = true;
    } else if (len == best && r->allow) {
      allow = true;
    }
  }
  return allow;
}

AccessResult CheckSiteAccess(std::string_view domain_in, const AccessOptions& options) {
  std::string domain = Lower(Trim(domain_in));
  while (!domain.empty() && domain.back() == '.') domain.pop_back();
  if (domain.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty domain");
  }

  std::string host = "www." + domain;
  if (!Resolves(host, options)) {
    host = domain;
    if (!Resolves(host, options)) return AccessResult::kUnreachable;
  }

  int timeouts = 0;
  while (true) {
    bool timed_out = false;
    for (const char* scheme : {"https", "http"}) {
      const FetchResult f = FetchRobots(scheme, host, options);
      if (f.kind == FetchKind::kResponse) return Interpret(f, options);
      if (f.kind == FetchKind::kTimeout) {
        timed_out = true;
        if (++timeouts >= options.attempts) return AccessResult::kUnreachable;
      }
    }
    if (!timed_out) return AccessResult::kUnreachable;
  }
}

std::vector<AccessResult> CheckSitesAccess(const std::vector<std::string>& domains,
                                           const AccessOptions& options,
                                           int parallelism) {
  std::vector<AccessResult> results(domains.size(), AccessResult::kUnreachable);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < domains.size(); i = next++) {
      try {
        results[i] = CheckSiteAccess(domains[i], options);
      } catch (const Error&) {
        results[i] = AccessResult::kUnreachable;
      }
    }
  };
  const int n = std::clamp<int>(parallelism, 1, std::max<int>(1, domains.size()));
  std::vector<std::jthread> pool;
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  return results;
}

}  // namespace tcfaudit
