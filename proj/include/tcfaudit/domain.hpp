#pragma once

// URL and domain helpers: host extraction, registrable domains (eTLD+1 per the
// bundled Public Suffix List) and query-string handling.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tcfaudit {

// Lower-cased host of an absolute URL, without userinfo or port. Empty when
// the URL has no authority.
std::string HostOf(std::string_view url);

// "a.b.example.co.uk" -> "example.co.uk". A host that is itself a public
// suffix (or an IP literal) is returned unchanged.
std::string RegistrableDomain(std::string_view host);

// Whether `url` is third-party relative to a page on `first_party_host`.
bool IsThirdPartyUrl(std::string_view url, std::string_view first_party_host);

std::string UrlEncode(std::string_view text);
// Decodes %XX escapes and '+' (as space). Malformed escapes are kept as-is.
std::string UrlDecode(std::string_view text);

using QueryParams = std::vector<std::pair<std::string, std::string>>;
QueryParams ParseQuery(std::string_view query);
std::optional<std::string> QueryParam(std::string_view url,
                                      std::string_view name);

}  // namespace tcfaudit
