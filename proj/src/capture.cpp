#include "tcfaudit/capture.hpp"

#include <algorithm>
#include <set>

#include "json_util.hpp"
#include "tcfaudit/consent.hpp"
#include "tcfaudit/domain.hpp"
#include "tcfaudit/error.hpp"

namespace tcfaudit {
namespace {

using detail::Json;

template <typename T>
Json OptionalToJson(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

bool ViolatesNoOptOut(const BannerAnnotation& a) {
  return a.banner_state == BannerState::kPresent &&
         a.opt_out_possible == false;
}

bool ViolatesPreSelected(const BannerAnnotation& a) {
  return a.banner_state == BannerState::kPresent &&
         a.opt_out_possible == true && a.pre_selected == true;
}

Json ObservationToJson(const ConsentObservation& o) {
  return {
      {"channel", ChannelName(o.channel)},
      {"raw", o.raw},
      {"page_url", o.page_url},
      {"request_url", OptionalToJson(o.request_url)},
      {"gdpr_applies_param", OptionalToJson(o.gdpr_applies_param)},
      {"timestamp_ms", o.timestamp_ms},
  };
}

ConsentObservation ObservationFromJson(const Json& j, const std::string& path) {
  ConsentObservation o;
  const std::string channel = detail::StringField(j, "channel", path);
  auto parsed = ParseChannel(channel);
  if (!parsed) {
    detail::SchemaFail(detail::Path(path, "channel"),
                       "unknown channel '" + channel + "'");
  }
  o.channel = *parsed;
  o.raw = detail::StringField(j, "raw", path);
  o.page_url = detail::StringField(j, "page_url", path);
  o.request_url = detail::OptionalString(j, "request_url", path);
  o.gdpr_applies_param = detail::OptionalBool(j, "gdpr_applies_param", path);
  o.timestamp_ms = detail::IntField(j, "timestamp_ms", path);
  if (IsUrlChannel(o.channel) != o.request_url.has_value()) {
    detail::SchemaFail(path, IsUrlChannel(o.channel)
                                 ? "URL-channel observation lacks request_url"
                                 : "request_url is only valid on URL channels");
  }
  return o;
}

Json RequestToJson(const RequestLogEntry& r) {
  Json j = {
      {"url", r.url},
      {"method", HttpMethodName(r.method)},
      {"third_party", r.third_party},
  };
  if (r.page_url) j["page_url"] = *r.page_url;
  return j;
}

RequestLogEntry RequestFromJson(const Json& j, const std::string& path) {
  RequestLogEntry r;
  r.url = detail::StringField(j, "url", path);
  const std::string method = detail::StringField(j, "method", path);
  auto parsed = ParseHttpMethod(method);
  if (!parsed) {
    detail::SchemaFail(detail::Path(path, "method"),
                       "unknown method '" + method + "'");
  }
  r.method = *parsed;
  r.third_party = detail::AsBool(detail::Field(j, "third_party", path),
                                 detail::Path(path, "third_party"));
  r.page_url = detail::OptionalString(j, "page_url", path);
  return r;
}

Json AnnotationToJson(const BannerAnnotation& a) {
  return {
      {"banner_state", BannerStateName(a.banner_state)},
      {"opt_out_possible", OptionalToJson(a.opt_out_possible)},
      {"pre_selected", OptionalToJson(a.pre_selected)},
      {"operator", a.operator_label},
  };
}

BannerAnnotation AnnotationFromJson(const Json& j, const std::string& path) {
  BannerAnnotation a;
  const std::string state = detail::StringField(j, "banner_state", path);
  auto parsed = ParseBannerState(state);
  if (!parsed) {
    detail::SchemaFail(detail::Path(path, "banner_state"),
                       "unknown banner state '" + state + "'");
  }
  a.banner_state = *parsed;
  a.opt_out_possible = detail::OptionalBool(j, "opt_out_possible", path);
  a.pre_selected = detail::OptionalBool(j, "pre_selected", path);
  a.operator_label = detail::OptionalString(j, "operator", path).value_or("");
  return a;
}

}  // namespace

std::string_view ChannelName(Channel c) {
  switch (c) {
    case Channel::kCmpFunction: return "cmp_function";
    case Channel::kCmpLocatorPostMessage: return "cmp_locator_postmessage";
    case Channel::kSharedCookie: return "shared_cookie";
    case Channel::kUrlGet: return "url_get";
    case Channel::kUrlPost: return "url_post";
  }
  return "";
}

std::string_view PhaseName(Phase p) {
  switch (p) {
    case Phase::kNoAction: return "no_action";
    case Phase::kAfterRefuse: return "after_refuse";
    case Phase::kAfterAccept: return "after_accept";
  }
  return "";
}

std::string_view HttpMethodName(HttpMethod m) {
  return m == HttpMethod::kGet ? "GET" : "POST";
}

std::string_view BannerStateName(BannerState s) {
  switch (s) {
    case BannerState::kPresent: return "present";
    case BannerState::kAbsent: return "absent";
    case BannerState::kBroken: return "broken";
  }
  return "";
}

std::optional<Channel> ParseChannel(std::string_view s) {
  for (Channel c : {Channel::kCmpFunction, Channel::kCmpLocatorPostMessage,
                    Channel::kSharedCookie, Channel::kUrlGet,
                    Channel::kUrlPost}) {
    if (ChannelName(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<Phase> ParsePhase(std::string_view s) {
  for (Phase p : kAllPhases) {
    if (PhaseName(p) == s) return p;
  }
  return std::nullopt;
}

std::optional<HttpMethod> ParseHttpMethod(std::string_view s) {
  if (s == "GET") return HttpMethod::kGet;
  if (s == "POST") return HttpMethod::kPost;
  return std::nullopt;
}

std::optional<BannerState> ParseBannerState(std::string_view s) {
  for (BannerState b :
       {BannerState::kPresent, BannerState::kAbsent, BannerState::kBroken}) {
    if (BannerStateName(b) == s) return b;
  }
  return std::nullopt;
}

ReconciledAnnotation ReconcileAnnotations(const SessionRecord& record) {
  const auto& all = record.annotations;
  if (all.empty()) {
    throw Error(ErrorCode::kNoAnnotations,
                record.domain + ": no banner annotations to reconcile");
  }
  if (all.size() == 1) return {all.front(), false};

  const bool any_present = std::any_of(all.begin(), all.end(), [](auto& a) {
    return a.banner_state == BannerState::kPresent;
  });
  const bool all_broken = std::all_of(all.begin(), all.end(), [](auto& a) {
    return a.banner_state == BannerState::kBroken;
  });

  ReconciledAnnotation out;
  BannerAnnotation& r = out.annotation;
  r.banner_state = any_present  ? BannerState::kPresent
                   : all_broken ? BannerState::kBroken
                                : BannerState::kAbsent;

  std::set<std::pair<bool, bool>> verdicts;
  std::string labels;
  for (const BannerAnnotation& a : all) {
    if (!labels.empty()) labels += "+";
    labels += a.operator_label;
    if (a.banner_state != r.banner_state) continue;
    if (a.opt_out_possible) {
      r.opt_out_possible = r.opt_out_possible.value_or(false) ||
                           *a.opt_out_possible;
    }
    if (a.pre_selected) {
      r.pre_selected = r.pre_selected.value_or(true) && *a.pre_selected;
    }
    verdicts.emplace(ViolatesNoOptOut(a), ViolatesPreSelected(a));
  }
  r.operator_label = labels;
  out.needs_review = verdicts.size() > 1;
  return out;
}

bool RefusalPossible(const SessionRecord& record) {
  if (record.annotations.empty()) return false;
  const BannerAnnotation a = ReconcileAnnotations(record).annotation;
  return a.banner_state == BannerState::kPresent && a.opt_out_possible == true;
}

nlohmann::json SessionToJson(const SessionRecord& r) {
  Json phases = Json::object();
  for (const auto& [phase, capture] : r.phases) {
    Json obs = Json::array();
    for (const auto& o : capture.observations) obs.push_back(ObservationToJson(o));
    Json reqs = Json::array();
    for (const auto& q : capture.requests) reqs.push_back(RequestToJson(q));
    phases[std::string(PhaseName(phase))] = {{"observations", std::move(obs)},
                                             {"requests", std::move(reqs)}};
  }
  Json annotations = Json::array();
  for (const auto& a : r.annotations) annotations.push_back(AnnotationToJson(a));
  Json probe = nullptr;
  if (r.shared_cookie_probe) {
    probe = {{"injected_raw", r.shared_cookie_probe->injected_raw},
             {"returned_raw",
              OptionalToJson(r.shared_cookie_probe->returned_raw)}};
  }
  return {
      {"domain", r.domain},
      {"tld", r.tld},
      {"tranco_rank", OptionalToJson(r.tranco_rank)},
      {"tcf_banner_detected", r.tcf_banner_detected},
      {"phases", std::move(phases)},
      {"annotations", std::move(annotations)},
      {"shared_cookie_probe", std::move(probe)},
  };
}

SessionRecord SessionFromJson(const nlohmann::json& j) {
  SessionRecord r;
  r.domain = detail::StringField(j, "domain", "record");
  if (r.domain.empty()) detail::SchemaFail("record.domain", "empty domain");
  r.tld = detail::StringField(j, "tld", "record");
  if (auto rank = detail::OptionalInt(j, "tranco_rank", "record")) {
    r.tranco_rank = static_cast<int>(*rank);
  }
  r.tcf_banner_detected =
      detail::AsBool(detail::Field(j, "tcf_banner_detected", "record"),
                     "record.tcf_banner_detected");

  if (const Json* phases = detail::OptionalField(j, "phases")) {
    if (!phases->is_object()) detail::SchemaFail("record.phases", "expected an object");
    for (const auto& [key, value] : phases->items()) {
      const std::string path = "record.phases." + key;
      auto phase = ParsePhase(key);
      if (!phase) detail::SchemaFail(path, "unknown phase");
      PhaseCapture capture;
      if (const Json* obs = detail::OptionalField(value, "observations")) {
        detail::AsArray(*obs, path + ".observations");
        for (std::size_t i = 0; i < obs->size(); ++i) {
          capture.observations.push_back(ObservationFromJson(
              (*obs)[i], detail::Path(path + ".observations", i)));
        }
      }
      if (const Json* reqs = detail::OptionalField(value, "requests")) {
        detail::AsArray(*reqs, path + ".requests");
        for (std::size_t i = 0; i < reqs->size(); ++i) {
          capture.requests.push_back(RequestFromJson(
              (*reqs)[i], detail::Path(path + ".requests", i)));
        }
      }
      r.phases.emplace(*phase, std::move(capture));
    }
  }

  if (const Json* anns = detail::OptionalField(j, "annotations")) {
    detail::AsArray(*anns, "record.annotations");
    for (std::size_t i = 0; i < anns->size(); ++i) {
      r.annotations.push_back(
          AnnotationFromJson((*anns)[i], detail::Path("record.annotations", i)));
    }
  }

  if (const Json* probe = detail::OptionalField(j, "shared_cookie_probe")) {
    SharedCookieProbe p;
    p.injected_raw =
        detail::StringField(*probe, "injected_raw", "record.shared_cookie_probe");
    p.returned_raw = detail::OptionalString(*probe, "returned_raw",
                                            "record.shared_cookie_probe");
    r.shared_cookie_probe = std::move(p);
  }

  // Post-interaction phases need a working banner, and refusal needs a way
  // to refuse.
  const bool has_refuse = r.phases.contains(Phase::kAfterRefuse);
  const bool has_accept = r.phases.contains(Phase::kAfterAccept);
  if (has_refuse || has_accept) {
    if (r.annotations.empty()) {
      detail::SchemaFail("record.phases",
                         "after_* phases require banner annotations");
    }
    const BannerAnnotation a = ReconcileAnnotations(r).annotation;
    if (a.banner_state != BannerState::kPresent) {
      detail::SchemaFail("record.phases",
                         "after_* phases require a present banner");
    }
    if (has_refuse && a.opt_out_possible != true) {
      detail::SchemaFail("record.phases.after_refuse",
                         "refusal phase recorded but opt-out is not possible");
    }
  }
  return r;
}

std::string SerializeSession(const SessionRecord& record) {
  return SessionToJson(record).dump();
}

std::string SerializeSessions(const std::vector<SessionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += SerializeSession(r);
    out += '\n';
  }
  return out;
}

LoadResult LoadSessions(std::string_view jsonl) {
  LoadResult result;
  std::size_t line_no = 0;
  std::size_t non_blank = 0;
  while (!jsonl.empty()) {
    const auto nl = jsonl.find('\n');
    std::string_view line = jsonl.substr(0, nl);
    jsonl.remove_prefix(nl == std::string_view::npos ? jsonl.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    ++non_blank;
    try {
      SessionRecord record =
          SessionFromJson(detail::ParseJson(line, "record"));
      for (const auto& [phase, capture] : record.phases) {
        for (std::size_t i = 0; i < capture.observations.size(); ++i) {
          try {
            DecodeConsent(capture.observations[i].raw);
          } catch (const Error& e) {
            result.warnings.push_back(
                {line_no, record.domain + " " + std::string(PhaseName(phase)) +
                              ".observations[" + std::to_string(i) +
                              "] undecodable (" +
                              std::string(ErrorCodeName(e.code())) +
                              "): " + e.what()});
          }
        }
        for (std::size_t i = 0; i < capture.requests.size(); ++i) {
          const RequestLogEntry& q = capture.requests[i];
          if (!q.page_url) continue;
          const bool derived = IsThirdPartyUrl(q.url, HostOf(*q.page_url));
          if (derived != q.third_party) {
            result.warnings.push_back(
                {line_no, record.domain + " " + std::string(PhaseName(phase)) +
                              ".requests[" + std::to_string(i) +
                              "] third_party flag disagrees with page_url; "
                              "using the derived value"});
          }
        }
      }
      result.records.push_back(std::move(record));
    } catch (const Error& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  if (result.records.empty() && non_blank > 0) {
    std::string message = "no valid capture records";
    if (!result.errors.empty()) {
      message += "; first error at line " +
                 std::to_string(result.errors.front().line) + ": " +
                 result.errors.front().message;
    }
    throw Error(ErrorCode::kSchemaError, message);
  }
  return result;
}

}  // namespace tcfaudit
