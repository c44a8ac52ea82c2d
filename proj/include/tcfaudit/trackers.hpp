#pragma once

#include <set>
#include <string>
#include <string_view>

namespace tcfaudit {

// Tracker domains, matched by suffix: a request host matches when it equals a
// listed domain or is a subdomain of one, down to its registrable domain.
class TrackerList {
 public:
  TrackerList() = default;

  // Disconnect services.json ({categories: {<cat>: [{<company>: {<url>:
  // [domains]}}]}}), or one domain per line with '#' comments.
  // Throws Error{kSchemaError} on JSON that is not Disconnect-shaped.
  static TrackerList Parse(std::string_view text);

  void Add(std::string domain);
  bool Matches(std::string_view host) const;

  const std::set<std::string, std::less<>>& domains() const { return domains_; }
  std::size_t size() const { return domains_.size(); }

 private:
  std::set<std::string, std::less<>> domains_;
};

}  // namespace tcfaudit
