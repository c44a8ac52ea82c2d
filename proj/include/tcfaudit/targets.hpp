#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tcfaudit {

struct RankedDomain {
  std::string domain;
  std::string tld;  // last label, without the dot
  int rank = 0;

  friend bool operator==(const RankedDomain&, const RankedDomain&) = default;
};

// Parses a "rank,domain" list (optional header line, CRLF tolerated).
// Throws Error{kMalformedRankLine} naming the offending line.
std::vector<RankedDomain> ParseRankList(std::string_view csv);

// For each requested TLD in order, the first `per_tld_cap` domains by rank.
// TLDs may be given with or without the leading dot.
std::vector<RankedDomain> SelectTargets(std::string_view csv,
                                        const std::vector<std::string>& tlds,
                                        int per_tld_cap = 1000);

}  // namespace tcfaudit
