#pragma once

// Crawl gating: robots.txt rules and reachability of a site's homepage.

#include <chrono>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tcfaudit {

enum class AccessResult { kAllowed, kDisallowedByRobots, kUnreachable };

std::string_view AccessResultName(AccessResult r);

// Whether `path` may be fetched by `user_agent` under the given robots.txt.
// Groups naming the agent take precedence over "*"; within the chosen rules
// the longest matching Allow/Disallow wins and Allow wins ties. '*' and a
// trailing '$' are honoured in patterns; Crawl-delay and Sitemap are ignored.
bool RobotsAllows(std::string_view robots_txt, std::string_view user_agent,
                  std::string_view path = "/");

struct AccessOptions {
  std::chrono::milliseconds timeout{10000};
  int attempts = 3;  // timeouts tolerated before giving up
  std::string user_agent = "tcfaudit";
  int https_port = 443;
  int http_port = 80;
  // Host -> IP overrides; other hosts go through the system resolver.
  std::map<std::string, std::string> resolve;
};

// Fetches https://www.<domain>/robots.txt, falling back to http on a
// connection failure and to the bare domain when www does not resolve.
// A missing robots.txt (404 and other 4xx but 401/403) allows everything;
// 401, 403 and 5xx disallow. `attempts` timeouts make the site Unreachable.
AccessResult CheckSiteAccess(std::string_view domain,
                             const AccessOptions& options = {});

// Runs CheckSiteAccess over `domains` with up to `parallelism` requests in
// flight; results follow input order.
std::vector<AccessResult> CheckSitesAccess(const std::vector<std::string>& domains,
                                           const AccessOptions& options = {},
                                           int parallelism = 8);

}  // namespace tcfaudit
