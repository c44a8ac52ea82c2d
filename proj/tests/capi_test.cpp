#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>

#include "tcfaudit/tcfaudit.h"

extern "C" int tcfa_header_check_decode_cmp(const char* raw);

namespace {

constexpr char kGolden[] = "BOX5uluOX5uluCLAAAENB6-AAAAizAAA";

std::string Slurp(const std::string& relative) {
  std::ifstream in(std::string(TCFAUDIT_SOURCE_DIR) + "/" + relative, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Freer {
  void operator()(char* p) const { tcfa_free(p); }
};
using Owned = std::unique_ptr<char, Freer>;

std::string Take(char* p) { return Owned(p).get() ? std::string(p) : std::string(); }

struct Registry {
  tcfa_registry* handle = nullptr;
  Registry() {
    const std::string gvl = Slurp("data/gvl-fixture.json");
    const std::string cmps = Slurp("data/cmp-list-fixture.json");
    EXPECT_EQ(tcfa_registry_load(gvl.c_str(), cmps.c_str(), nullptr, nullptr, &handle), TCFA_OK)
        << tcfa_last_error();
  }
  ~Registry() { tcfa_registry_free(handle); }
};

TEST(CApi, DecodeGolden) {
  tcfa_consent* c = nullptr;
  ASSERT_EQ(tcfa_consent_decode(kGolden, &c), TCFA_OK);
  EXPECT_EQ(tcfa_consent_version(c), 1);
  EXPECT_EQ(tcfa_consent_cmp_id(c), 139);
  EXPECT_EQ(tcfa_consent_vendor_list_version(c), 122);
  EXPECT_EQ(tcfa_consent_max_vendor_id(c), 556);
  EXPECT_STREQ(tcfa_consent_language(c), "EN");
  EXPECT_EQ(tcfa_consent_created(c), 15433394542);
  int ids[8];
  ASSERT_EQ(tcfa_consent_purposes(c, ids, 2), 5u);
  EXPECT_EQ(ids[0], 1);
  EXPECT_EQ(ids[1], 2);
  EXPECT_EQ(tcfa_consent_vendors(c, nullptr, 0), 556u);
  EXPECT_TRUE(tcfa_consent_has_vendor(c, 556));
  EXPECT_FALSE(tcfa_consent_has_vendor(c, 557));

  char* raw = nullptr;
  ASSERT_EQ(tcfa_consent_encode(c, &raw), TCFA_OK);
  EXPECT_EQ(Take(raw), kGolden);

  char* text = nullptr;
  ASSERT_EQ(tcfa_consent_format(c, nullptr, &text), TCFA_OK);
  EXPECT_NE(Take(text).find("2018-11-27 17:24:14"), std::string::npos);

  char* json = nullptr;
  ASSERT_EQ(tcfa_consent_to_json(c, "UTC", &json), TCFA_OK);
  tcfa_consent* back = nullptr;
  ASSERT_EQ(tcfa_consent_from_json(Take(json).c_str(), &back), TCFA_OK);
  ASSERT_EQ(tcfa_consent_encode(back, &raw), TCFA_OK);
  EXPECT_EQ(Take(raw), kGolden);
  tcfa_consent_free(back);
  tcfa_consent_free(c);

  EXPECT_EQ(tcfa_header_check_decode_cmp(kGolden), 139);
}

TEST(CApi, ErrorsCarryCodeAndMessage) {
  tcfa_consent* c = nullptr;
  EXPECT_EQ(tcfa_consent_decode("BOX5u", &c), TCFA_MALFORMED_BASE64);
  EXPECT_EQ(c, nullptr);
  EXPECT_NE(std::string(tcfa_last_error()).find("MalformedBase64"), std::string::npos);
  EXPECT_STREQ(tcfa_status_name(TCFA_NON_CANONICAL_PADDING), "NonCanonicalPadding");

  EXPECT_EQ(tcfa_consent_decode(nullptr, &c), TCFA_INVALID_ARGUMENT);
  EXPECT_EQ(tcfa_consent_decode(kGolden, nullptr), TCFA_INVALID_ARGUMENT);
  ASSERT_EQ(tcfa_consent_decode(kGolden, &c), TCFA_OK);
  EXPECT_STREQ(tcfa_last_error(), "");
  tcfa_consent_free(c);
  tcfa_consent_free(nullptr);
  tcfa_free(nullptr);

  tcfa_registry* r = nullptr;
  EXPECT_EQ(tcfa_registry_load("{", nullptr, nullptr, nullptr, &r), TCFA_SCHEMA_ERROR);
}

TEST(CApi, RegistryAndTrackers) {
  Registry reg;
  EXPECT_EQ(tcfa_registry_max_vendor_id(reg.handle), 670);
  tcfa_cmp_status status;
  char* name = nullptr;
  ASSERT_EQ(tcfa_registry_identify_cmp(reg.handle, 10, &status, &name), TCFA_OK);
  EXPECT_EQ(status, TCFA_CMP_KNOWN);
  EXPECT_EQ(Take(name), "Fixture CMP 10");
  ASSERT_EQ(tcfa_registry_identify_cmp(reg.handle, 4095, &status, nullptr), TCFA_OK);
  EXPECT_EQ(status, TCFA_CMP_INVALID);

  tcfa_registry_options options;
  tcfa_registry_options_init(&options);
  const int invalid[] = {77};
  options.invalid_cmp_ids = invalid;
  options.invalid_cmp_id_count = 1;
  tcfa_registry* custom = nullptr;
  ASSERT_EQ(tcfa_registry_load(nullptr, nullptr, nullptr, &options, &custom), TCFA_OK);
  ASSERT_EQ(tcfa_registry_identify_cmp(custom, 77, &status, nullptr), TCFA_OK);
  EXPECT_EQ(status, TCFA_CMP_INVALID);
  tcfa_registry_free(custom);

  tcfa_trackers* t = nullptr;
  ASSERT_EQ(tcfa_trackers_load(Slurp("data/trackers-fixture.json").c_str(), &t), TCFA_OK);
  EXPECT_EQ(tcfa_trackers_size(t), 80u);
  EXPECT_TRUE(tcfa_trackers_match(t, "px3.advertising-07.com"));
  tcfa_trackers_free(t);
}

TEST(CApi, SimulateAuditReport) {
  Registry reg;
  tcfa_trackers* t = nullptr;
  ASSERT_EQ(tcfa_trackers_load(Slurp("data/trackers-fixture.json").c_str(), &t), TCFA_OK);
  const std::string plan = Slurp("tests/data/oracle_plan.json");

  char* corpus = nullptr;
  char* manifest = nullptr;
  ASSERT_EQ(tcfa_simulate(plan.c_str(), 0, 0, reg.handle, t, &corpus, &manifest), TCFA_OK)
      << tcfa_last_error();
  const std::string captures = Take(corpus);
  EXPECT_NE(Take(manifest).find("\"findings\""), std::string::npos);

  tcfa_audit_options options;
  tcfa_audit_options_init(&options);
  EXPECT_EQ(options.non_respect_min_purposes, 5);
  char* audit = nullptr;
  char* diagnostics = nullptr;
  ASSERT_EQ(tcfa_audit(captures.c_str(), reg.handle, t, &options, &audit, &diagnostics), TCFA_OK)
      << tcfa_last_error();
  EXPECT_EQ(Take(diagnostics), "");
  const std::string audit_text = Take(audit);

  char* report = nullptr;
  ASSERT_EQ(tcfa_report(audit_text.c_str(), TCFA_REPORT_MARKDOWN, nullptr, &report), TCFA_OK);
  EXPECT_EQ(Take(report).rfind("# Audit report", 0), 0u);

  options.non_respect_min_purposes = 0;
  EXPECT_EQ(tcfa_audit(captures.c_str(), reg.handle, t, &options, &audit, nullptr),
            TCFA_INVALID_ARGUMENT);

  EXPECT_EQ(tcfa_audit("{\"x\":1}\n", reg.handle, nullptr, nullptr, &audit, nullptr),
            TCFA_SCHEMA_ERROR);
  tcfa_trackers_free(t);
}

TEST(CApi, SelectTargets) {
  const char* tlds[] = {"fr", "de"};
  char* out = nullptr;
  ASSERT_EQ(tcfa_select_targets("1,a.fr\n2,b.de\n3,c.fr\n", tlds, 2, 1, &out), TCFA_OK);
  EXPECT_EQ(Take(out), "rank,domain,tld\n1,a.fr,fr\n2,b.de,de\n");
  EXPECT_EQ(tcfa_select_targets("1,a.fr\nzz\n", tlds, 2, 1, &out), TCFA_MALFORMED_RANK_LINE);
}

TEST(CApi, RobotsAndRedirect) {
  int allowed = -1;
  ASSERT_EQ(tcfa_robots_allows("User-agent: *\nDisallow: /\n", "x", "/", &allowed), TCFA_OK);
  EXPECT_EQ(allowed, 0);
  EXPECT_STREQ(tcfa_access_name(TCFA_ACCESS_DISALLOWED_BY_ROBOTS), "DisallowedByRobots");

  tcfa_redirect_options options;
  tcfa_redirect_options_init(&options);
  tcfa_redirect_server* server = nullptr;
  ASSERT_EQ(tcfa_redirect_server_start(&options, &server), TCFA_OK) << tcfa_last_error();
  httplib::Client client("127.0.0.1", tcfa_redirect_server_port(server));
  auto res = client.Get("/redirect?redirect_uri=https%3A%2F%2Fad.example%2F",
                        {{"Cookie", std::string("euconsent=") + kGolden}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->get_header_value("Location"),
            std::string("https://ad.example/?gdpr_consent=") + kGolden);
  tcfa_redirect_server_free(server);
}

TEST(CApi, Version) { EXPECT_STREQ(tcfa_version(), "0.1.0"); }

}  // namespace
