#include "tcfaudit/consent.hpp"

#include <absl/time/time.h>

#include <algorithm>
#include <array>
#include <limits>

#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

constexpr std::int64_t kMaxTimestamp = (std::int64_t{1} << 36) - 1;

int SextetOf(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '-') return 62;
  if (c == '_') return 63;
  return -1;
}

// Reads MSB-first fields out of a string of base64 sextets.
class BitReader {
 public:
  explicit BitReader(std::vector<std::uint8_t> sextets)
      : sextets_(std::move(sextets)) {}

  std::size_t size() const { return sextets_.size() * 6; }
  std::size_t position() const { return pos_; }

  std::uint64_t Read(int width, std::string_view field) {
    if (pos_ + width > size()) {
      throw Error(ErrorCode::kTruncatedPayload,
                  "consent string ends at bit " + std::to_string(size()) +
                      " while reading " + std::string(field) + " (bits " +
                      std::to_string(pos_) + ".." +
                      std::to_string(pos_ + width - 1) + ")");
    }
    std::uint64_t value = 0;
    for (int i = 0; i < width; ++i, ++pos_) {
      const int bit = (sextets_[pos_ / 6] >> (5 - pos_ % 6)) & 1;
      value = (value << 1) | static_cast<std::uint64_t>(bit);
    }
    return value;
  }

  bool RestIsZero() const {
    for (std::size_t p = pos_; p < size(); ++p) {
      if ((sextets_[p / 6] >> (5 - p % 6)) & 1) return false;
    }
    return true;
  }

 private:
  std::vector<std::uint8_t> sextets_;
  std::size_t pos_ = 0;
};

class BitWriter {
 public:
  void Write(std::uint64_t value, int width) {
    for (int i = width - 1; i >= 0; --i) bits_.push_back((value >> i) & 1);
  }
  void WriteBit(bool bit) { bits_.push_back(bit); }

  // Pads to whole bytes (as the reference encoder does), then to whole
  // sextets, and renders without '=' padding.
  std::string ToBase64() const {
    std::vector<bool> bits = bits_;
    while (bits.size() % 8 != 0) bits.push_back(false);
    const std::size_t chars = (bits.size() + 5) / 6;
    bits.resize(chars * 6, false);
    std::string out;
    out.reserve(chars);
    for (std::size_t c = 0; c < chars; ++c) {
      int v = 0;
      for (int i = 0; i < 6; ++i) v = (v << 1) | (bits[c * 6 + i] ? 1 : 0);
      out.push_back(kAlphabet[v]);
    }
    return out;
  }

 private:
  std::vector<bool> bits_;
};

std::vector<std::uint8_t> ParseSextets(std::string_view raw) {
  while (!raw.empty() && raw.back() == '=') raw.remove_suffix(1);
  std::vector<std::uint8_t> sextets;
  sextets.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int v = SextetOf(raw[i]);
    if (v < 0) {
      throw Error(ErrorCode::kMalformedBase64,
                  "invalid character '" + std::string(1, raw[i]) +
                      "' at offset " + std::to_string(i) +
                      " (expected web-safe base64)");
    }
    sextets.push_back(static_cast<std::uint8_t>(v));
  }
  // A lone trailing sextet cannot encode a byte in any base64 variant.
  if (sextets.size() % 4 == 1) {
    throw Error(ErrorCode::kMalformedBase64,
                "base64 length " + std::to_string(sextets.size()) +
                    " leaves a dangling character");
  }
  return sextets;
}

void Require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kInvariantViolation, message);
}

}  // namespace

bool operator==(const ConsentString& a, const ConsentString& b) {
  return a.version == b.version && a.created == b.created &&
         a.last_updated == b.last_updated && a.cmp_id == b.cmp_id &&
         a.cmp_version == b.cmp_version &&
         a.consent_screen == b.consent_screen &&
         a.consent_language == b.consent_language &&
         a.vendor_list_version == b.vendor_list_version &&
         a.allowed_purposes == b.allowed_purposes &&
         a.max_vendor_id == b.max_vendor_id &&
         a.allowed_vendors == b.allowed_vendors;
}

ConsentString DecodeConsent(std::string_view raw) {
  BitReader in(ParseSextets(raw));
  ConsentString c;
  c.version = static_cast<int>(in.Read(6, "Version"));
  if (c.version != 1) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported consent string version " +
                    std::to_string(c.version));
  }
  c.created = static_cast<std::int64_t>(in.Read(36, "Created"));
  c.last_updated = static_cast<std::int64_t>(in.Read(36, "LastUpdated"));
  c.cmp_id = static_cast<int>(in.Read(12, "CmpId"));
  c.cmp_version = static_cast<int>(in.Read(12, "CmpVersion"));
  c.consent_screen = static_cast<int>(in.Read(6, "ConsentScreen"));
  c.consent_language.clear();
  for (int i = 0; i < 2; ++i) {
    c.consent_language.push_back(
        static_cast<char>('A' + in.Read(6, "ConsentLanguage")));
  }
  c.vendor_list_version = static_cast<int>(in.Read(12, "VendorListVersion"));
  const std::uint64_t purposes = in.Read(kPurposeBits, "PurposesAllowed");
  for (int p = 1; p <= kPurposeBits; ++p) {
    if ((purposes >> (kPurposeBits - p)) & 1) c.allowed_purposes.insert(p);
  }
  c.max_vendor_id = static_cast<int>(in.Read(16, "MaxVendorId"));

  VendorSection section;
  if (in.Read(1, "EncodingType") == 0) {
    section.encoding = VendorEncoding::kBitfield;
    for (int v = 1; v <= c.max_vendor_id; ++v) {
      if (in.Read(1, "BitField")) c.allowed_vendors.insert(v);
    }
  } else {
    section.encoding = VendorEncoding::kRange;
    section.default_consent = in.Read(1, "DefaultConsent") != 0;
    const int num_entries = static_cast<int>(in.Read(12, "NumEntries"));
    std::vector<bool> exception(static_cast<std::size_t>(c.max_vendor_id) + 1);
    for (int e = 0; e < num_entries; ++e) {
      const bool is_range = in.Read(1, "SingleOrRange") != 0;
      VendorRange r;
      r.start = static_cast<int>(in.Read(16, "StartVendorId"));
      r.end = is_range ? static_cast<int>(in.Read(16, "EndVendorId")) : r.start;
      if (r.start < 1 || r.start > r.end || r.end > c.max_vendor_id) {
        throw Error(ErrorCode::kInvalidRangeEntry,
                    "range entry " + std::to_string(e) + " [" +
                        std::to_string(r.start) + "," + std::to_string(r.end) +
                        "] outside 1.." + std::to_string(c.max_vendor_id));
      }
      for (int v = r.start; v <= r.end; ++v) exception[v] = true;
      section.entries.push_back(r);
    }
    for (int v = 1; v <= c.max_vendor_id; ++v) {
      if (exception[v] != section.default_consent) c.allowed_vendors.insert(v);
    }
  }
  c.vendor_section = std::move(section);

  if (!in.RestIsZero()) {
    throw Error(ErrorCode::kNonCanonicalPadding,
                "non-zero bits after the payload end at bit " +
                    std::to_string(in.position()));
  }
  return c;
}

void ValidateConsent(const ConsentString& c) {
  Require(c.version == 1, "version must be 1");
  Require(c.created >= 0 && c.created <= kMaxTimestamp,
          "created does not fit in 36 bits");
  Require(c.last_updated >= 0 && c.last_updated <= kMaxTimestamp,
          "last_updated does not fit in 36 bits");
  Require(c.cmp_id >= 0 && c.cmp_id <= 0xFFF, "cmp_id does not fit in 12 bits");
  Require(c.cmp_version >= 0 && c.cmp_version <= 0xFFF,
          "cmp_version does not fit in 12 bits");
  Require(c.consent_screen >= 0 && c.consent_screen <= 0x3F,
          "consent_screen does not fit in 6 bits");
  Require(c.consent_language.size() == 2 &&
              std::all_of(c.consent_language.begin(), c.consent_language.end(),
                          [](char ch) { return ch >= 'A' && ch <= 'Z'; }),
          "consent_language must be two uppercase ASCII letters");
  Require(c.vendor_list_version >= 0 && c.vendor_list_version <= 0xFFF,
          "vendor_list_version does not fit in 12 bits");
  Require(c.max_vendor_id >= 0 && c.max_vendor_id <= kMaxVendorIdLimit,
          "max_vendor_id does not fit in 16 bits");
  Require(c.allowed_purposes.empty() ||
              (*c.allowed_purposes.begin() >= 1 &&
               *c.allowed_purposes.rbegin() <= kPurposeBits),
          "allowed purposes must lie in 1..24");
  Require(c.allowed_vendors.empty() ||
              (*c.allowed_vendors.begin() >= 1 &&
               *c.allowed_vendors.rbegin() <= c.max_vendor_id),
          "allowed vendors must lie in 1..max_vendor_id");
}

std::vector<VendorRange> VendorRangesFor(const std::set<int>& vendors,
                                         int max_vendor_id,
                                         bool default_consent) {
  std::vector<VendorRange> entries;
  int v = 1;
  while (v <= max_vendor_id) {
    // An exception is a vendor whose consent differs from the default.
    if (vendors.contains(v) == default_consent) {
      ++v;
      continue;
    }
    int end = v;
    while (end + 1 <= max_vendor_id &&
           vendors.contains(end + 1) != default_consent) {
      ++end;
    }
    entries.push_back({v, end});
    v = end + 1;
  }
  return entries;
}

std::size_t BitfieldVendorBits(int max_vendor_id) {
  return static_cast<std::size_t>(max_vendor_id);
}

std::size_t RangeVendorBits(const std::vector<VendorRange>& entries) {
  std::size_t bits = 1 + 12;
  for (const VendorRange& r : entries) bits += r.start == r.end ? 17 : 33;
  return bits;
}

std::string EncodeConsent(const ConsentString& c) {
  ValidateConsent(c);

  BitWriter out;
  out.Write(static_cast<std::uint64_t>(c.version), 6);
  out.Write(static_cast<std::uint64_t>(c.created), 36);
  out.Write(static_cast<std::uint64_t>(c.last_updated), 36);
  out.Write(static_cast<std::uint64_t>(c.cmp_id), 12);
  out.Write(static_cast<std::uint64_t>(c.cmp_version), 12);
  out.Write(static_cast<std::uint64_t>(c.consent_screen), 6);
  for (char ch : c.consent_language) out.Write(static_cast<std::uint64_t>(ch - 'A'), 6);
  out.Write(static_cast<std::uint64_t>(c.vendor_list_version), 12);
  std::uint64_t purposes = 0;
  for (int p : c.allowed_purposes) purposes |= std::uint64_t{1} << (kPurposeBits - p);
  out.Write(purposes, kPurposeBits);
  out.Write(static_cast<std::uint64_t>(c.max_vendor_id), 16);

  // Pick the layout: honour an explicit request, otherwise the shortest.
  std::optional<VendorEncoding> requested;
  std::optional<bool> requested_default;
  if (c.vendor_section) {
    requested = c.vendor_section->encoding;
    if (requested == VendorEncoding::kRange) {
      requested_default = c.vendor_section->default_consent;
    }
  }

  std::vector<VendorRange> best_ranges;
  bool best_default = false;
  bool have_ranges = false;
  for (bool dflt : {false, true}) {
    if (requested_default && *requested_default != dflt) continue;
    auto ranges = VendorRangesFor(c.allowed_vendors, c.max_vendor_id, dflt);
    if (static_cast<int>(ranges.size()) > kMaxRangeEntries) continue;
    if (!have_ranges || RangeVendorBits(ranges) < RangeVendorBits(best_ranges)) {
      best_ranges = std::move(ranges);
      best_default = dflt;
      have_ranges = true;
    }
  }

  bool use_range;
  if (requested == VendorEncoding::kRange) {
    Require(have_ranges, "vendor set needs more than 4095 range entries");
    use_range = true;
  } else if (requested == VendorEncoding::kBitfield) {
    use_range = false;
  } else {
    use_range = have_ranges && RangeVendorBits(best_ranges) <
                                   BitfieldVendorBits(c.max_vendor_id);
  }

  if (!use_range) {
    out.WriteBit(false);
    for (int v = 1; v <= c.max_vendor_id; ++v) {
      out.WriteBit(c.allowed_vendors.contains(v));
    }
  } else {
    out.WriteBit(true);
    out.WriteBit(best_default);
    out.Write(best_ranges.size(), 12);
    for (const VendorRange& r : best_ranges) {
      const bool is_range = r.start != r.end;
      out.WriteBit(is_range);
      out.Write(static_cast<std::uint64_t>(r.start), 16);
      if (is_range) out.Write(static_cast<std::uint64_t>(r.end), 16);
    }
  }
  return out.ToBase64();
}

int CountTcfPurposes(const ConsentString& c) {
  int n = 0;
  for (int p = 1; p <= kTcfPurposeCount; ++p) n += c.allowed_purposes.contains(p);
  return n;
}

bool HasAllTcfPurposes(const ConsentString& c) {
  return CountTcfPurposes(c) == kTcfPurposeCount;
}

std::set<int> PurposesBeyondTcf(const ConsentString& c) {
  return {c.allowed_purposes.upper_bound(kTcfPurposeCount),
          c.allowed_purposes.end()};
}

std::string FormatDeciseconds(std::int64_t deciseconds, std::string_view zone) {
  absl::TimeZone tz;
  if (zone == "UTC" || zone.empty()) {
    tz = absl::UTCTimeZone();
  } else if (!absl::LoadTimeZone(std::string(zone), &tz)) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown time zone '" + std::string(zone) + "'");
  }
  const absl::Time t = absl::FromUnixSeconds(deciseconds / 10);
  return absl::FormatTime("%Y-%m-%d %H:%M:%S", t, tz);
}

}  // namespace tcfaudit
