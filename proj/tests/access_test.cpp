#include <chrono>

#include <gtest/gtest.h>

#include "support/mock_web.hpp"
#include "tcfaudit/access.hpp"

namespace tcfaudit {
namespace {

using namespace std::chrono_literals;
using testing::ClosedPort;
using testing::MockRobotsServer;
using testing::RobotsReply;

TEST(Robots, DisallowAll) {
  EXPECT_FALSE(RobotsAllows("User-agent: *\nDisallow: /\n", "tcfaudit"));
  EXPECT_TRUE(RobotsAllows("User-agent: *\nDisallow:\n", "tcfaudit"));
  EXPECT_TRUE(RobotsAllows("", "tcfaudit"));
}

TEST(Robots, SpecificAgentWins) {
  const char* robots =
      "User-agent: *\nDisallow: /\n\n"
      "User-agent: TcfAudit\nDisallow: /private\n";
  EXPECT_TRUE(RobotsAllows(robots, "tcfaudit/0.1", "/"));
  EXPECT_FALSE(RobotsAllows(robots, "tcfaudit", "/private/x"));
  EXPECT_FALSE(RobotsAllows(robots, "otherbot", "/"));
}

TEST(Robots, LongestMatchAndAllowTies) {
  const char* robots =
      "User-agent: *\n"
      "Disallow: /shop\n"
      "Allow: /shop/public\n"
      "Disallow: /*.pdf$\n"
      "Allow: /tie\nDisallow: /tie\n";
  EXPECT_FALSE(RobotsAllows(robots, "a", "/shop/cart"));
  EXPECT_TRUE(RobotsAllows(robots, "a", "/shop/public/x"));
  EXPECT_FALSE(RobotsAllows(robots, "a", "/docs/file.pdf"));
  EXPECT_TRUE(RobotsAllows(robots, "a", "/docs/file.pdf?x"));
  EXPECT_TRUE(RobotsAllows(robots, "a", "/tie"));
}

TEST(Robots, GroupedAgentsAndNoise) {
  const char* robots =
      "# comment\r\n"
      "User-agent: a\r\nUser-agent: b\r\nCrawl-delay: 5\r\nDisallow: / # all\r\n"
      "Sitemap: https://x.example/sitemap.xml\r\n";
  EXPECT_FALSE(RobotsAllows(robots, "b", "/"));
  EXPECT_TRUE(RobotsAllows(robots, "c", "/"));
}

AccessOptions LoopbackOptions(const MockRobotsServer& server) {
  AccessOptions o;
  o.timeout = 300ms;
  o.attempts = 3;
  o.https_port = ClosedPort();
  o.http_port = server.port();
  for (const char* host : {"www.allow.test", "www.deny.test", "www.missing.test",
                           "www.slow.test", "www.forbidden.test", "bare.test"}) {
    o.resolve[host] = "127.0.0.1";
  }
  return o;
}

TEST(Access, AgainstLoopbackServer) {
  MockRobotsServer server({
      {"www.allow.test", {200, "User-agent: *\nDisallow: /admin\n", {}}},
      {"www.deny.test", {200, "User-agent: *\nDisallow: /\n", {}}},
      {"www.forbidden.test", {403, "", {}}},
      {"bare.test", {200, "User-agent: tcfaudit\nDisallow: /\n", {}}},
  });
  const AccessOptions o = LoopbackOptions(server);
  EXPECT_EQ(CheckSiteAccess("allow.test", o), AccessResult::kAllowed);
  EXPECT_EQ(CheckSiteAccess("deny.test", o), AccessResult::kDisallowedByRobots);
  EXPECT_EQ(CheckSiteAccess("missing.test", o), AccessResult::kAllowed);
  EXPECT_EQ(CheckSiteAccess("forbidden.test", o), AccessResult::kDisallowedByRobots);
  // www.bare.test does not resolve, so the bare domain is asked.
  EXPECT_EQ(CheckSiteAccess("bare.test", o), AccessResult::kDisallowedByRobots);
  EXPECT_EQ(server.requests("bare.test"), 1);
  EXPECT_EQ(CheckSiteAccess("nowhere.invalid", o), AccessResult::kUnreachable);
}

TEST(Access, GivesUpAfterRepeatedTimeouts) {
  MockRobotsServer server({{"www.slow.test", {200, "", 5s}}});
  const AccessOptions o = LoopbackOptions(server);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(CheckSiteAccess("slow.test", o), AccessResult::kUnreachable);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_EQ(server.requests("www.slow.test"), 3);
  EXPECT_GE(elapsed, 850ms);
  EXPECT_LT(elapsed, 3s);
}

TEST(Access, BatchKeepsInputOrder) {
  MockRobotsServer server({
      {"www.allow.test", {200, "", {}}},
      {"www.deny.test", {200, "User-agent: *\nDisallow: /\n", {}}},
  });
  const auto results = CheckSitesAccess(
      {"deny.test", "allow.test", "nowhere.invalid", "allow.test"}, LoopbackOptions(server), 3);
  EXPECT_EQ(results, (std::vector<AccessResult>{AccessResult::kDisallowedByRobots,
                                                AccessResult::kAllowed, AccessResult::kUnreachable,
                                                AccessResult::kAllowed}));
}

}  // namespace
}  // namespace tcfaudit
