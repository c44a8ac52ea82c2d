#include <chrono>
#include <random>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "support/fixtures.hpp"
#include "tcfaudit/consent.hpp"
#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

using testing::ReadFile;
using testing::RandomConsent;
using testing::SourcePath;

constexpr char kGolden[] = "BOX5uluOX5uluCLAAAENB6-AAAAizAAA";

// Builds payloads bit by bit as a string of '0'/'1', independently of the
// codec's own writer.
class Bits {
 public:
  Bits& Put(std::uint64_t value, int width) {
    for (int i = width - 1; i >= 0; --i) s_.push_back(((value >> i) & 1) ? '1' : '0');
    return *this;
  }
  Bits& Raw(const std::string& bits) {
    s_ += bits;
    return *this;
  }
  std::string Base64() const {
    static constexpr char kAlphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
    std::string bits = s_;
    while (bits.size() % 8) bits.push_back('0');
    while (bits.size() % 6) bits.push_back('0');
    std::string out;
    for (std::size_t i = 0; i < bits.size(); i += 6) {
      out.push_back(kAlphabet[std::stoi(bits.substr(i, 6), nullptr, 2)]);
    }
    return out;
  }

 private:
  std::string s_;
};

// Header through MaxVendorId for a v1 string.
Bits Header(int version, int cmp_id, int max_vendor_id, std::uint32_t purposes) {
  Bits b;
  b.Put(version, 6)
      .Put(15100000000, 36)
      .Put(15100000123, 36)
      .Put(cmp_id, 12)
      .Put(7, 12)
      .Put(3, 6)
      .Put('F' - 'A', 6)
      .Put('R' - 'A', 6)
      .Put(150, 12)
      .Put(purposes, 24)
      .Put(max_vendor_id, 16);
  return b;
}

ErrorCode DecodeError(const std::string& raw) {
  try {
    DecodeConsent(raw);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << raw << " decoded without error";
  return ErrorCode::kInvalidArgument;
}

TEST(ConsentDecode, GoldenString) {
  const ConsentString c = DecodeConsent(kGolden);
  EXPECT_EQ(c.version, 1);
  EXPECT_EQ(c.cmp_id, 139);
  EXPECT_EQ(c.vendor_list_version, 122);
  EXPECT_EQ(c.allowed_purposes, (std::set<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(c.max_vendor_id, 556);
  for (int v : {1, 2, 3, 554, 555, 556}) EXPECT_TRUE(c.allowed_vendors.contains(v)) << v;
  EXPECT_EQ(c.allowed_vendors.size(), 556u);
  EXPECT_EQ(c.created, 15433394542);
  EXPECT_EQ(FormatDeciseconds(c.created), "2018-11-27 17:24:14");
  EXPECT_EQ(FormatDeciseconds(c.created, "Europe/Paris"), "2018-11-27 18:24:14");
  ASSERT_TRUE(c.vendor_section);
  EXPECT_EQ(c.vendor_section->encoding, VendorEncoding::kRange);
  EXPECT_TRUE(c.vendor_section->default_consent);
  EXPECT_TRUE(c.vendor_section->entries.empty());
}

TEST(ConsentDecode, GoldenReencodesByteExact) {
  EXPECT_EQ(EncodeConsent(DecodeConsent(kGolden)), kGolden);
}

TEST(ConsentDecode, FormatShowsHeadlineFields) {
  const std::string text = FormatConsent(DecodeConsent(kGolden));
  EXPECT_NE(text.find("cmpId: 139\n"), std::string::npos) << text;
  EXPECT_NE(text.find("allowedPurposeIds: 1-5\n"), std::string::npos) << text;
  EXPECT_NE(text.find("2018-11-27 17:24:14 (UTC)"), std::string::npos) << text;
}

TEST(ConsentDecode, ReferenceVectors) {
  const auto doc = nlohmann::json::parse(ReadFile(SourcePath("tests/data/consent_vectors.json")));
  ASSERT_GE(doc["vectors"].size(), 50u);
  for (const auto& v : doc["vectors"]) {
    SCOPED_TRACE(v["label"].get<std::string>());
    const ConsentString c = DecodeConsent(v["raw"].get<std::string>());
    EXPECT_EQ(c, ConsentFromJson(v));
    EXPECT_EQ(c.created, v["created"].get<std::int64_t>());
    EXPECT_EQ(c.allowed_vendors, v["allowed_vendors"].get<std::set<int>>());
    // Same layout as the reference encoder chose.
    EXPECT_EQ(EncodeConsent(c), v["raw"].get<std::string>());
  }
}

TEST(ConsentDecode, BitOrderOfEveryHeaderField) {
  const std::string raw =
      Header(1, 0xABC, 12, 0b101000000000000000000001).Put(0, 1).Raw("100000000001").Base64();
  const ConsentString c = DecodeConsent(raw);
  EXPECT_EQ(c.created, 15100000000);
  EXPECT_EQ(c.last_updated, 15100000123);
  EXPECT_EQ(c.cmp_id, 0xABC);
  EXPECT_EQ(c.cmp_version, 7);
  EXPECT_EQ(c.consent_screen, 3);
  EXPECT_EQ(c.consent_language, "FR");
  EXPECT_EQ(c.vendor_list_version, 150);
  EXPECT_EQ(c.allowed_purposes, (std::set<int>{1, 3, 24}));
  EXPECT_EQ(c.allowed_vendors, (std::set<int>{1, 12}));
}

TEST(ConsentDecode, RangeEntries) {
  // Default 0 with a single entry (7) and a range (9..11).
  const std::string raw = Header(1, 5, 20, 1u << 23)
                              .Put(1, 1)
                              .Put(0, 1)
                              .Put(2, 12)
                              .Put(0, 1)
                              .Put(7, 16)
                              .Put(1, 1)
                              .Put(9, 16)
                              .Put(11, 16)
                              .Base64();
  const ConsentString c = DecodeConsent(raw);
  EXPECT_EQ(c.allowed_vendors, (std::set<int>{7, 9, 10, 11}));
  ASSERT_TRUE(c.vendor_section);
  EXPECT_EQ(c.vendor_section->entries,
            (std::vector<VendorRange>{{7, 7}, {9, 11}}));
}

TEST(ConsentDecode, Errors) {
  EXPECT_EQ(DecodeError("BOX5ulu*X5uluCLAAAENB6-AAAAizAAA"), ErrorCode::kMalformedBase64);
  EXPECT_EQ(DecodeError("BOX5u"), ErrorCode::kMalformedBase64);
  EXPECT_EQ(DecodeError("BOX5uluOX5ul"), ErrorCode::kTruncatedPayload);
  EXPECT_EQ(DecodeError(""), ErrorCode::kTruncatedPayload);
  EXPECT_EQ(DecodeError("COX5uluOX5uluCLAAAENB6-AAAAizAAA"), ErrorCode::kUnsupportedVersion);
  EXPECT_EQ(DecodeError("BOX5uluOX5uluCLAAAENB6-AAAAizAAB"), ErrorCode::kNonCanonicalPadding);

  // Range end before start, and a range past MaxVendorId.
  const auto range = [](int start, int end) {
    return Header(1, 5, 20, 0).Put(1, 1).Put(0, 1).Put(1, 12).Put(1, 1).Put(start, 16).Put(end, 16).Base64();
  };
  EXPECT_EQ(DecodeError(range(9, 3)), ErrorCode::kInvalidRangeEntry);
  EXPECT_EQ(DecodeError(range(3, 21)), ErrorCode::kInvalidRangeEntry);
  EXPECT_EQ(DecodeError(range(0, 2)), ErrorCode::kInvalidRangeEntry);
}

TEST(ConsentDecode, AcceptsTrailingEqualsPadding) {
  EXPECT_EQ(DecodeConsent(std::string(kGolden) + "=="), DecodeConsent(kGolden));
}

TEST(ConsentEncode, RejectsOutOfRangeFields) {
  ConsentString c = DecodeConsent(kGolden);
  c.cmp_id = 4096;
  EXPECT_THROW(EncodeConsent(c), Error);
  c = DecodeConsent(kGolden);
  c.allowed_purposes.insert(25);
  EXPECT_THROW(EncodeConsent(c), Error);
  c = DecodeConsent(kGolden);
  c.allowed_vendors.insert(600);  // beyond max_vendor_id
  EXPECT_THROW(EncodeConsent(c), Error);
  c = DecodeConsent(kGolden);
  c.consent_language = "fr";
  EXPECT_THROW(EncodeConsent(c), Error);
}

TEST(ConsentEncode, PicksShorterLayoutWhenUnspecified) {
  ConsentString c;
  c.max_vendor_id = 2000;
  for (int v = 1; v <= 2000; ++v) c.allowed_vendors.insert(v);
  const ConsentString dense = DecodeConsent(EncodeConsent(c));
  EXPECT_EQ(dense.vendor_section->encoding, VendorEncoding::kRange);

  c.allowed_vendors.clear();
  for (int v = 1; v <= 2000; v += 2) c.allowed_vendors.insert(v);
  const ConsentString sparse = DecodeConsent(EncodeConsent(c));
  EXPECT_EQ(sparse.vendor_section->encoding, VendorEncoding::kBitfield);
}

TEST(ConsentRoundTrip, ThousandSeededStrings) {
  std::mt19937_64 rng(42);
  int range = 0;
  int bitfield = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    const ConsentString c = RandomConsent(rng);
    const std::string raw = EncodeConsent(c);
    const ConsentString back = DecodeConsent(raw);
    ASSERT_EQ(back, c) << "case " << i << ": " << raw;
    if (c.vendor_section) {
      ASSERT_EQ(back.vendor_section->encoding, c.vendor_section->encoding) << i;
    }
    (back.vendor_section->encoding == VendorEncoding::kRange ? range : bitfield)++;
    ASSERT_EQ(EncodeConsent(back), raw) << i;
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GT(range, 200);
  EXPECT_GT(bitfield, 200);
  EXPECT_LT(elapsed, std::chrono::seconds(1));
}

TEST(ConsentJson, RoundTripsThroughJson) {
  const ConsentString c = DecodeConsent(kGolden);
  const auto j = ConsentToJson(c, "UTC");
  EXPECT_EQ(j["created_text"], "2018-11-27 17:24:14");
  EXPECT_EQ(j["vendor_encoding"], "range");
  const ConsentString back = ConsentFromJson(j);
  EXPECT_EQ(back, c);
  EXPECT_EQ(EncodeConsent(back), kGolden);
}

TEST(ConsentJson, RejectsMissingFields) {
  EXPECT_THROW(ConsentFromJson(nlohmann::json{{"cmp_id", 3}}), Error);
  EXPECT_THROW(ConsentFromJson(nlohmann::json::array()), Error);
}

TEST(ConsentPurposes, TcfCountsIgnoreHigherBits) {
  ConsentString c;
  c.allowed_purposes = {2, 5, 6, 24};
  EXPECT_EQ(CountTcfPurposes(c), 2);
  EXPECT_FALSE(HasAllTcfPurposes(c));
  EXPECT_EQ(PurposesBeyondTcf(c), (std::set<int>{6, 24}));
}

}  // namespace
}  // namespace tcfaudit
