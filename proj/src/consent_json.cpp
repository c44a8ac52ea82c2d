#include <algorithm>
#include <cctype>

#include "json_util.hpp"
#include "tcfaudit/consent.hpp"
#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

using detail::Json;

std::string JoinRuns(const std::set<int>& ids) {
  std::string out;
  auto it = ids.begin();
  while (it != ids.end()) {
    const int start = *it;
    int end = start;
    auto next = std::next(it);
    while (next != ids.end() && *next == end + 1) {
      end = *next;
      ++next;
    }
    if (!out.empty()) out += ", ";
    out += std::to_string(start);
    if (end > start) out += (end == start + 1 ? ", " : "-") + std::to_string(end);
    it = next;
  }
  return out.empty() ? "(none)" : out;
}

std::set<int> IdSet(const Json& j, const char* key) {
  std::set<int> out;
  const std::string path = std::string("consent.") + key;
  for (const Json& v : detail::AsArray(detail::Field(j, key, "consent"), path)) {
    out.insert(static_cast<int>(detail::AsInt(v, path)));
  }
  return out;
}

}  // namespace

nlohmann::json ConsentToJson(const ConsentString& c,
                             std::optional<std::string_view> zone) {
  Json j = {
      {"version", c.version},
      {"created", c.created},
      {"last_updated", c.last_updated},
      {"cmp_id", c.cmp_id},
      {"cmp_version", c.cmp_version},
      {"consent_screen", c.consent_screen},
      {"consent_language", c.consent_language},
      {"vendor_list_version", c.vendor_list_version},
      {"allowed_purposes", c.allowed_purposes},
      {"max_vendor_id", c.max_vendor_id},
      {"allowed_vendors", c.allowed_vendors},
  };
  if (c.vendor_section) {
    j["vendor_encoding"] =
        c.vendor_section->encoding == VendorEncoding::kRange ? "range" : "bitfield";
    if (c.vendor_section->encoding == VendorEncoding::kRange) {
      j["default_consent"] = c.vendor_section->default_consent;
    }
  }
  if (zone) {
    j["created_text"] = FormatDeciseconds(c.created, *zone);
    j["last_updated_text"] = FormatDeciseconds(c.last_updated, *zone);
  }
  return j;
}

ConsentString ConsentFromJson(const nlohmann::json& j) {
  if (!j.is_object()) detail::SchemaFail("consent", "expected an object");
  ConsentString c;
  c.version = static_cast<int>(detail::OptionalInt(j, "version", "consent").value_or(1));
  c.created = detail::IntField(j, "created", "consent");
  c.last_updated =
      detail::OptionalInt(j, "last_updated", "consent").value_or(c.created);
  c.cmp_id = static_cast<int>(detail::IntField(j, "cmp_id", "consent"));
  c.cmp_version =
      static_cast<int>(detail::OptionalInt(j, "cmp_version", "consent").value_or(0));
  c.consent_screen =
      static_cast<int>(detail::OptionalInt(j, "consent_screen", "consent").value_or(0));
  c.consent_language =
      detail::OptionalString(j, "consent_language", "consent").value_or("EN");
  std::transform(c.consent_language.begin(), c.consent_language.end(),
                 c.consent_language.begin(),
                 [](unsigned char ch) { return std::toupper(ch); });
  c.vendor_list_version =
      static_cast<int>(detail::IntField(j, "vendor_list_version", "consent"));
  c.allowed_purposes = IdSet(j, "allowed_purposes");
  c.allowed_vendors = IdSet(j, "allowed_vendors");
  c.max_vendor_id = static_cast<int>(
      detail::OptionalInt(j, "max_vendor_id", "consent")
          .value_or(c.allowed_vendors.empty() ? 0 : *c.allowed_vendors.rbegin()));
  if (auto enc = detail::OptionalString(j, "vendor_encoding", "consent")) {
    VendorSection section;
    if (*enc == "range") {
      section.encoding = VendorEncoding::kRange;
      section.default_consent =
          detail::OptionalBool(j, "default_consent", "consent").value_or(false);
    } else if (*enc == "bitfield") {
      section.encoding = VendorEncoding::kBitfield;
    } else {
      detail::SchemaFail("consent.vendor_encoding", "expected bitfield or range");
    }
    c.vendor_section = section;
  }
  ValidateConsent(c);
  return c;
}

std::string FormatConsent(const ConsentString& c, std::string_view zone) {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += std::string(key) + ": " + value + "\n";
  };
  line("version", std::to_string(c.version));
  line("created", FormatDeciseconds(c.created, zone) + " (" + std::string(zone) + ")");
  line("lastUpdated",
       FormatDeciseconds(c.last_updated, zone) + " (" + std::string(zone) + ")");
  line("cmpId", std::to_string(c.cmp_id));
  line("cmpVersion", std::to_string(c.cmp_version));
  line("consentScreen", std::to_string(c.consent_screen));
  line("consentLanguage", c.consent_language);
  line("vendorListVersion", std::to_string(c.vendor_list_version));
  line("allowedPurposeIds", JoinRuns(c.allowed_purposes));
  line("maxVendorId", std::to_string(c.max_vendor_id));
  if (c.vendor_section) {
    const VendorSection& v = *c.vendor_section;
    if (v.encoding == VendorEncoding::kRange) {
      line("encodingType", "range (default consent " +
                               std::to_string(v.default_consent ? 1 : 0) + ", " +
                               std::to_string(v.entries.size()) + " entries)");
    } else {
      line("encodingType", "bitfield");
    }
  }
  line("allowedVendorIds", JoinRuns(c.allowed_vendors) + " [" +
                               std::to_string(c.allowed_vendors.size()) + " vendors]");
  return out;
}

}  // namespace tcfaudit
