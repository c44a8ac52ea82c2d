#include "tcfaudit/trackers.hpp"

#include <algorithm>
#include <cctype>

#include "json_util.hpp"
#include "tcfaudit/domain.hpp"

namespace tcfaudit {
namespace {

using detail::Json;

std::string Normalize(std::string_view d) {
  while (!d.empty() && std::isspace(static_cast<unsigned char>(d.front()))) d.remove_prefix(1);
  while (!d.empty() && std::isspace(static_cast<unsigned char>(d.back()))) d.remove_suffix(1);
  while (!d.empty() && d.front() == '.') d.remove_prefix(1);
  std::string out(d);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

void CollectDisconnect(const Json& categories, TrackerList& out) {
  if (!categories.is_object()) {
    detail::SchemaFail("categories", "expected an object");
  }
  for (const auto& [category, entries] : categories.items()) {
    const std::string cpath = "categories." + category;
    detail::AsArray(entries, cpath);
    for (const Json& entry : entries) {
      if (!entry.is_object()) detail::SchemaFail(cpath, "expected company objects");
      for (const auto& [company, sites] : entry.items()) {
        if (!sites.is_object()) continue;
        // Alongside the homepage -> domains arrays, some entries carry
        // flags such as "dnt": "eff"; those are not arrays.
        for (const auto& [homepage, domains] : sites.items()) {
          if (!domains.is_array()) continue;
          for (const Json& d : domains) {
            if (d.is_string()) out.Add(d.get<std::string>());
          }
        }
      }
    }
  }
}

}  // namespace

TrackerList TrackerList::Parse(std::string_view text) {
  TrackerList out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    const Json doc = detail::ParseJson(text, "tracker list");
    CollectDisconnect(detail::Field(doc, "categories", "tracker list"), out);
    return out;
  }
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    line = line.substr(0, line.find('#'));
    std::string d = Normalize(line);
    if (!d.empty()) out.Add(std::move(d));
  }
  return out;
}

void TrackerList::Add(std::string domain) {
  std::string d = Normalize(domain);
  if (!d.empty()) domains_.insert(std::move(d));
}

bool TrackerList::Matches(std::string_view host_in) const {
  std::string host = Normalize(host_in);
  while (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty()) return false;
  const std::string registrable = RegistrableDomain(host);
  std::string_view candidate = host;
  while (true) {
    if (domains_.contains(candidate)) return true;
    if (candidate.size() <= registrable.size()) return false;
    const auto dot = candidate.find('.');
    if (dot == std::string_view::npos) return false;
    candidate.remove_prefix(dot + 1);
  }
}

}  // namespace tcfaudit
