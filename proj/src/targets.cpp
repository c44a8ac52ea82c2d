#include "tcfaudit/targets.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string NormalizeTld(std::string_view tld) {
  tld = Trim(tld);
  if (!tld.empty() && tld.front() == '.') tld.remove_prefix(1);
  return Lower(tld);
}

}  // namespace

std::vector<RankedDomain> ParseRankList(std::string_view csv) {
  std::vector<RankedDomain> out;
  std::size_t line_no = 0;
  bool first_content = true;
  while (!csv.empty()) {
    const auto nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv.remove_prefix(nl == std::string_view::npos ? csv.size() : nl + 1);
    ++line_no;
    line = Trim(line);
    if (line.empty()) continue;

    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::kMalformedRankLine,
                  "line " + std::to_string(line_no) + ": " + why + " in '" +
                      std::string(line) + "'");
    };
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) fail("expected rank,domain");
    const std::string_view rank_text = Trim(line.substr(0, comma));
    const std::string_view domain = Trim(line.substr(comma + 1));

    int rank = 0;
    const auto [end, ec] =
        std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
    if (ec != std::errc() || end != rank_text.data() + rank_text.size()) {
      if (first_content) {  // header line
        first_content = false;
        continue;
      }
      fail("rank is not an integer");
    }
    first_content = false;
    if (rank < 1) fail("rank must be positive");
    if (domain.empty() || domain.find_first_of(", \t") != std::string_view::npos) {
      fail("bad domain");
    }
    RankedDomain d;
    d.domain = Lower(domain);
    while (!d.domain.empty() && d.domain.back() == '.') d.domain.pop_back();
    const auto dot = d.domain.rfind('.');
    if (dot == std::string::npos || dot + 1 == d.domain.size()) fail("domain has no TLD");
    d.tld = d.domain.substr(dot + 1);
    d.rank = rank;
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedDomain& a, const RankedDomain& b) { return a.rank < b.rank; });
  return out;
}

std::vector<RankedDomain> SelectTargets(std::string_view csv,
                                        const std::vector<std::string>& tlds,
                                        int per_tld_cap) {
  if (per_tld_cap < 0) {
    throw Error(ErrorCode::kInvalidArgument, "per-TLD cap must be non-negative");
  }
  const std::vector<RankedDomain> ranked = ParseRankList(csv);
  std::vector<RankedDomain> out;
  std::set<std::string> seen;
  for (const std::string& requested : tlds) {
    const std::string tld = NormalizeTld(requested);
    if (tld.empty() || !seen.insert(tld).second) continue;
    int taken = 0;
    for (const RankedDomain& d : ranked) {
      if (taken >= per_tld_cap) break;
      if (d.tld != tld) continue;
      out.push_back(d);
      ++taken;
    }
  }
  return out;
}

}  // namespace tcfaudit
