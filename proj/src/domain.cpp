#include "tcfaudit/domain.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace tcfaudit {
namespace detail {
extern const std::string_view kPublicSuffixRules;
}  // namespace detail

namespace {

std::string ToLower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

struct SuffixRules {
  std::unordered_set<std::string> exact;
  std::unordered_set<std::string> wildcard;   // "*.ck" stored as "ck"
  std::unordered_set<std::string> exception;  // "!www.ck" stored as "www.ck"
};

const SuffixRules& Rules() {
  static const SuffixRules rules = [] {
    SuffixRules r;
    std::string_view all = detail::kPublicSuffixRules;
    while (!all.empty()) {
      const auto nl = all.find('\n');
      std::string_view line = all.substr(0, nl);
      all.remove_prefix(nl == std::string_view::npos ? all.size() : nl + 1);
      if (line.empty()) continue;
      if (line.front() == '!') {
        r.exception.insert(ToLower(line.substr(1)));
      } else if (line.starts_with("*.")) {
        r.wildcard.insert(ToLower(line.substr(2)));
      } else {
        r.exact.insert(ToLower(line));
      }
    }
    return r;
  }();
  return rules;
}

bool IsIpLiteral(std::string_view host) {
  if (host.find(':') != std::string_view::npos) return true;  // IPv6
  return !host.empty() && std::all_of(host.begin(), host.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  });
}

// Number of labels in the public suffix of `host`.
std::size_t PublicSuffixLabels(const std::vector<std::string_view>& labels) {
  const SuffixRules& rules = Rules();
  std::size_t best = 1;  // implicit "*" rule
  std::string suffix;
  for (std::size_t n = 1; n <= labels.size(); ++n) {
    const std::string_view label = labels[labels.size() - n];
    suffix = n == 1 ? std::string(label)
                    : std::string(label) + "." + suffix;
    if (rules.exception.contains(suffix)) return n - 1;
    if (rules.exact.contains(suffix)) best = std::max(best, n);
    if (n < labels.size()) {
      // "*.parent" covers this label's child.
      if (rules.wildcard.contains(suffix)) best = std::max(best, n + 1);
    }
  }
  return best;
}

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string HostOf(std::string_view url) {
  std::string_view rest;
  if (url.starts_with("//")) {
    rest = url.substr(2);
  } else {
    const auto scheme = url.find("://");
    if (scheme == std::string_view::npos) return {};
    rest = url.substr(scheme + 3);
  }
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) {
    rest.remove_prefix(at + 1);
  }
  if (!rest.empty() && rest.front() == '[') {
    const auto close = rest.find(']');
    return ToLower(rest.substr(1, close == std::string_view::npos
                                      ? std::string_view::npos
                                      : close - 1));
  }
  rest = rest.substr(0, rest.find(':'));
  while (!rest.empty() && rest.back() == '.') rest.remove_suffix(1);
  return ToLower(rest);
}

std::string RegistrableDomain(std::string_view host_in) {
  std::string host = ToLower(host_in);
  while (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty() || IsIpLiteral(host)) return host;

  std::vector<std::string_view> labels;
  std::string_view rest = host;
  while (true) {
    const auto dot = rest.find('.');
    labels.push_back(rest.substr(0, dot));
    if (dot == std::string_view::npos) break;
    rest.remove_prefix(dot + 1);
  }
  const std::size_t suffix_labels = PublicSuffixLabels(labels);
  if (suffix_labels >= labels.size()) return host;
  std::string out;
  for (std::size_t i = labels.size() - suffix_labels - 1; i < labels.size();
       ++i) {
    if (!out.empty()) out.push_back('.');
    out.append(labels[i]);
  }
  return out;
}

bool IsThirdPartyUrl(std::string_view url, std::string_view first_party_host) {
  const std::string host = HostOf(url);
  if (host.empty()) return false;
  return RegistrableDomain(host) != RegistrableDomain(first_party_host);
}

std::string UrlEncode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(text.size() * 3);
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string UrlDecode(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '+') {
      out.push_back(' ');
    } else if (c == '%' && i + 2 < text.size() &&
               HexValue(text[i + 1]) >= 0 && HexValue(text[i + 2]) >= 0) {
      out.push_back(
          static_cast<char>(HexValue(text[i + 1]) * 16 + HexValue(text[i + 2])));
      i += 2;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

QueryParams ParseQuery(std::string_view query) {
  QueryParams out;
  while (!query.empty()) {
    const auto amp = query.find('&');
    std::string_view pair = query.substr(0, amp);
    query.remove_prefix(amp == std::string_view::npos ? query.size() : amp + 1);
    if (pair.empty()) continue;
    const auto eq = pair.find('=');
    if (eq == std::string_view::npos) {
      out.emplace_back(UrlDecode(pair), std::string());
    } else {
      out.emplace_back(UrlDecode(pair.substr(0, eq)),
                       UrlDecode(pair.substr(eq + 1)));
    }
  }
  return out;
}

std::optional<std::string> QueryParam(std::string_view url,
                                      std::string_view name) {
  auto q = url.find('?');
  if (q == std::string_view::npos) return std::nullopt;
  std::string_view query = url.substr(q + 1);
  query = query.substr(0, query.find('#'));
  for (auto& [k, v] : ParseQuery(query)) {
    if (k == name) return v;
  }
  return std::nullopt;
}

}  // namespace tcfaudit
