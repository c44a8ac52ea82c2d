#pragma once

// TCF v1.1 consent strings: the bit-packed, web-safe base64 payload CMPs
// store in cookies and hand to advertisers.
//
// Wire layout (MSB first):
//   Version(6) Created(36) LastUpdated(36) CmpId(12) CmpVersion(12)
//   ConsentScreen(6) ConsentLanguage(2x6, 'A'=0) VendorListVersion(12)
//   PurposesAllowed(24) MaxVendorId(16) EncodingType(1)
// followed by either a MaxVendorId-bit vendor bitfield, or
//   DefaultConsent(1) NumEntries(12) {SingleOrRange(1) Start(16) [End(16)]}*
// Bits after the payload must be zero.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tcfaudit {

inline constexpr int kPurposeBits = 24;
inline constexpr int kTcfPurposeCount = 5;
inline constexpr int kMaxVendorIdLimit = 0xFFFF;
inline constexpr int kMaxRangeEntries = 0xFFF;

enum class VendorEncoding { kBitfield, kRange };

// Inclusive; start == end for a single vendor entry.
struct VendorRange {
  int start = 0;
  int end = 0;

  friend bool operator==(const VendorRange&, const VendorRange&) = default;
};

struct VendorSection {
  VendorEncoding encoding = VendorEncoding::kBitfield;
  // Range encoding only: the consent value for ids not covered by `entries`.
  bool default_consent = false;
  std::vector<VendorRange> entries;

  friend bool operator==(const VendorSection&, const VendorSection&) = default;
};

struct ConsentString {
  int version = 1;
  std::int64_t created = 0;       // deciseconds since the Unix epoch
  std::int64_t last_updated = 0;  // deciseconds since the Unix epoch
  int cmp_id = 0;
  int cmp_version = 0;
  int consent_screen = 0;
  std::string consent_language = "EN";
  int vendor_list_version = 0;
  std::set<int> allowed_purposes;
  int max_vendor_id = 0;
  std::set<int> allowed_vendors;

  // Layout of the vendor section on the wire. The decoder records what it
  // saw; the encoder honours `encoding` and `default_consent` when set and
  // otherwise picks the shorter layout. Entries are always recomputed from
  // allowed_vendors. Excluded from equality.
  std::optional<VendorSection> vendor_section;

  // Payload equality: every decoded field except the vendor wire layout.
  friend bool operator==(const ConsentString& a, const ConsentString& b);
};

// Throws Error{kMalformedBase64 | kTruncatedPayload | kUnsupportedVersion |
// kNonCanonicalPadding | kInvalidRangeEntry}.
ConsentString DecodeConsent(std::string_view raw);

// Throws Error{kInvariantViolation} when a field is out of range. Output is
// unpadded web-safe base64.
std::string EncodeConsent(const ConsentString& consent);

void ValidateConsent(const ConsentString& consent);

// Number of allowed purposes among the five TCF purposes.
int CountTcfPurposes(const ConsentString& consent);
bool HasAllTcfPurposes(const ConsentString& consent);
// Purposes above 5 carried by the string (24 bits are available on the wire).
std::set<int> PurposesBeyondTcf(const ConsentString& consent);

// Renders deciseconds as "YYYY-MM-DD HH:MM:SS" (sub-second digits truncated)
// in the named IANA zone; "UTC" by default.
std::string FormatDeciseconds(std::int64_t deciseconds,
                              std::string_view zone = "UTC");

// Bit lengths of the two vendor layouts for a given vendor set.
std::size_t BitfieldVendorBits(int max_vendor_id);
std::size_t RangeVendorBits(const std::vector<VendorRange>& entries);
// Minimal exception list describing `vendors` against `default_consent`.
std::vector<VendorRange> VendorRangesFor(const std::set<int>& vendors,
                                         int max_vendor_id,
                                         bool default_consent);

// JSON view using the field names of tests/data/consent_vectors.json. When
// `zone` is given, created_text / last_updated_text are added. The wire
// layout appears as vendor_encoding / default_consent when known.
nlohmann::json ConsentToJson(const ConsentString& consent,
                             std::optional<std::string_view> zone = {});
// Accepts the same fields (the *_text ones are ignored) and a lowercase
// language. Throws Error{kSchemaError | kInvariantViolation}.
ConsentString ConsentFromJson(const nlohmann::json& j);

// Multi-line human-readable rendering of every field.
std::string FormatConsent(const ConsentString& consent,
                          std::string_view zone = "UTC");

}  // namespace tcfaudit
