#include "tcfaudit/registry.hpp"

#include <charconv>

#include "json_util.hpp"

namespace tcfaudit {
namespace {

using detail::Json;

std::set<int> PurposeIdSet(const Json& arr, const std::string& path) {
  std::set<int> out;
  detail::AsArray(arr, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto id = detail::AsInt(arr[i], detail::Path(path, i));
    if (id < 1 || id > kTcfPurposeCount) {
      detail::SchemaFail(detail::Path(path, i),
                         "purpose id " + std::to_string(id) +
                             " outside 1..5");
    }
    out.insert(static_cast<int>(id));
  }
  return out;
}

int ParseIdKey(const std::string& key, const std::string& path) {
  int id = 0;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
  if (ec != std::errc() || ptr != key.data() + key.size()) {
    detail::SchemaFail(path, "CMP map key '" + key + "' is not an integer");
  }
  return id;
}

void CheckPositive(std::int64_t id, const std::string& path) {
  if (id < 1) detail::SchemaFail(path, "ids must be positive");
}

}  // namespace

std::string_view CmpStatusName(CmpStatus status) {
  switch (status) {
    case CmpStatus::kKnown: return "known";
    case CmpStatus::kInvalid: return "invalid";
    case CmpStatus::kUnknown: return "unknown";
  }
  return "unknown";
}

std::optional<CmpStatus> ParseCmpStatus(std::string_view name) {
  if (name == "known") return CmpStatus::kKnown;
  if (name == "invalid") return CmpStatus::kInvalid;
  if (name == "unknown") return CmpStatus::kUnknown;
  return std::nullopt;
}

const std::vector<Purpose>& DefaultPurposes() {
  static const std::vector<Purpose> kPurposes = {
      {1, "Information storage and access",
       "Storing or reading identifiers and other information on the user's "
       "device."},
      {2, "Personalisation",
       "Using data about service usage to personalise advertising or content "
       "across other contexts over time."},
      {3, "Ad selection, delivery, reporting",
       "Selecting, delivering and measuring advertisements."},
      {4, "Content selection, delivery, reporting",
       "Selecting, delivering and measuring content."},
      {5, "Measurement",
       "Measuring and reporting on how the service is used."},
  };
  return kPurposes;
}

VendorRegistry::VendorRegistry() : VendorRegistry(RegistryOptions{}) {}

VendorRegistry::VendorRegistry(RegistryOptions options)
    : options_(std::move(options)) {
  for (const Purpose& p : DefaultPurposes()) purposes_[p.id] = p;
}

int VendorRegistry::max_vendor_id() const {
  return vendors_.empty() ? 0 : vendors_.rbegin()->first;
}

const Vendor* VendorRegistry::FindVendor(int id) const {
  auto it = vendors_.find(id);
  return it == vendors_.end() ? nullptr : &it->second;
}

VendorRegistry& VendorRegistry::Merge(const VendorRegistry& fragment) {
  for (const auto& [id, v] : fragment.vendors_) {
    if (!vendors_.emplace(id, v).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "vendor id " + std::to_string(id) + " defined twice");
    }
  }
  for (const auto& [id, c] : fragment.cmps_) {
    if (!cmps_.emplace(id, c).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "CMP id " + std::to_string(id) + " defined twice");
    }
  }
  if (fragment.gvl_version_) gvl_version_ = fragment.gvl_version_;
  return *this;
}

void VendorRegistry::OverridePurposes(std::vector<Purpose> purposes) {
  purposes_.clear();
  for (Purpose& p : purposes) purposes_[p.id] = std::move(p);
}

CmpIdentity VendorRegistry::IdentifyCmp(int id) const {
  if (options_.invalid_cmp_ids.contains(id)) {
    return {CmpStatus::kInvalid, id, {}};
  }
  if (auto it = cmps_.find(id); it != cmps_.end()) {
    return {CmpStatus::kKnown, id, it->second.name};
  }
  return {CmpStatus::kUnknown, id, {}};
}

bool VendorRegistry::HasConsentBasedVendor(const ConsentString& c) const {
  for (int v : c.allowed_vendors) {
    const Vendor* vendor = FindVendor(v);
    if (!vendor) {
      if (options_.unknown_vendors_consent_based) return true;
      continue;
    }
    for (int p : vendor->consent_purposes) {
      if (c.allowed_purposes.contains(p)) return true;
    }
  }
  return false;
}

VendorRegistry LoadVendorList(std::string_view document) {
  const Json doc = detail::ParseJson(document, "GVL");
  VendorRegistry out;
  out.gvl_version_ =
      static_cast<int>(detail::IntField(doc, "vendorListVersion", "GVL"));
  const Json& vendors =
      detail::AsArray(detail::Field(doc, "vendors", "GVL"), "GVL.vendors");
  for (std::size_t i = 0; i < vendors.size(); ++i) {
    const std::string path = detail::Path("GVL.vendors", i);
    const Json& jv = vendors[i];
    Vendor v;
    const auto id = detail::IntField(jv, "id", path);
    CheckPositive(id, path);
    v.id = static_cast<int>(id);
    v.name = detail::StringField(jv, "name", path);
    v.consent_purposes = PurposeIdSet(detail::Field(jv, "purposeIds", path),
                                      detail::Path(path, "purposeIds"));
    v.legitimate_interest_purposes =
        PurposeIdSet(detail::Field(jv, "legIntPurposeIds", path),
                     detail::Path(path, "legIntPurposeIds"));
    if (!out.vendors_.emplace(v.id, std::move(v)).second) {
      throw Error(ErrorCode::kDuplicateId,
                  path + ": vendor id " + std::to_string(id) +
                      " appears more than once");
    }
  }
  return out;
}

VendorRegistry LoadCmpList(std::string_view document) {
  const Json doc = detail::ParseJson(document, "CMP list");
  VendorRegistry out;
  auto add = [&](int id, std::string name, const std::string& path) {
    CheckPositive(id, path);
    if (!out.cmps_.emplace(id, Cmp{id, std::move(name)}).second) {
      throw Error(ErrorCode::kDuplicateId,
                  path + ": CMP id " + std::to_string(id) +
                      " appears more than once");
    }
  };

  const Json& cmps = detail::Field(doc, "cmps", "CMP list");
  if (cmps.is_array()) {
    for (std::size_t i = 0; i < cmps.size(); ++i) {
      const std::string path = detail::Path("cmps", i);
      add(static_cast<int>(detail::IntField(cmps[i], "id", path)),
          detail::StringField(cmps[i], "name", path), path);
    }
  } else if (cmps.is_object()) {
    for (const auto& [key, value] : cmps.items()) {
      const std::string path = detail::Path("cmps", key);
      const int id = ParseIdKey(key, path);
      if (value.is_string()) {
        add(id, value.get<std::string>(), path);
      } else {
        if (auto inner = detail::OptionalInt(value, "id", path);
            inner && *inner != id) {
          detail::SchemaFail(path, "id field disagrees with map key");
        }
        add(id, detail::StringField(value, "name", path), path);
      }
    }
  } else {
    detail::SchemaFail("cmps", "expected an array or an object");
  }
  return out;
}

std::vector<Purpose> LoadPurposes(std::string_view document) {
  const Json doc = detail::ParseJson(document, "purposes");
  const Json& arr = detail::AsArray(detail::Field(doc, "purposes", "purposes"),
                                    "purposes");
  std::vector<Purpose> out;
  std::set<int> seen;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = detail::Path("purposes", i);
    Purpose p;
    p.id = static_cast<int>(detail::IntField(arr[i], "id", path));
    p.name = detail::StringField(arr[i], "name", path);
    p.description =
        detail::OptionalString(arr[i], "description", path).value_or("");
    if (!seen.insert(p.id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  path + ": purpose id appears more than once");
    }
    out.push_back(std::move(p));
  }
  if (seen != std::set<int>{1, 2, 3, 4, 5}) {
    detail::SchemaFail("purposes", "must define exactly the purposes 1..5");
  }
  return out;
}

VendorRegistry BuildRegistry(std::string_view gvl_document,
                             std::string_view cmp_document,
                             RegistryOptions options) {
  VendorRegistry registry(std::move(options));
  registry.Merge(LoadVendorList(gvl_document));
  registry.Merge(LoadCmpList(cmp_document));
  return registry;
}

}  // namespace tcfaudit
