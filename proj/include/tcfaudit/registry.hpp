#pragma once

// Global Vendor List, public CMP list and the TCF purpose catalog.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tcfaudit/consent.hpp"

namespace tcfaudit {

struct Purpose {
  int id = 0;
  std::string name;
  std::string description;

  friend bool operator==(const Purpose&, const Purpose&) = default;
};

struct Vendor {
  int id = 0;
  std::string name;
  std::set<int> consent_purposes;
  std::set<int> legitimate_interest_purposes;

  friend bool operator==(const Vendor&, const Vendor&) = default;
};

struct Cmp {
  int id = 0;
  std::string name;

  friend bool operator==(const Cmp&, const Cmp&) = default;
};

enum class CmpStatus { kKnown, kInvalid, kUnknown };

struct CmpIdentity {
  CmpStatus status = CmpStatus::kUnknown;
  int id = 0;
  std::string name;  // set for kKnown

  friend bool operator==(const CmpIdentity&, const CmpIdentity&) = default;
};

std::string_view CmpStatusName(CmpStatus status);
std::optional<CmpStatus> ParseCmpStatus(std::string_view name);

struct RegistryOptions {
  // IDs that never denote a real CMP. IAB's list started at 2 in 2019 and
  // 4095 is the all-ones 12-bit value.
  std::set<int> invalid_cmp_ids{0, 1, 4095};
  // Vendors missing from the GVL are assumed to rely on consent.
  bool unknown_vendors_consent_based = true;
};

// The five TCF v1.1 purposes as published in IAB Europe's register.
const std::vector<Purpose>& DefaultPurposes();

// Built once from snapshots, then read-only and shareable across threads.
class VendorRegistry {
 public:
  VendorRegistry();
  explicit VendorRegistry(RegistryOptions options);

  std::optional<int> gvl_version() const { return gvl_version_; }
  const std::map<int, Vendor>& vendors() const { return vendors_; }
  const std::map<int, Cmp>& cmps() const { return cmps_; }
  const std::map<int, Purpose>& purposes() const { return purposes_; }
  const RegistryOptions& options() const { return options_; }

  // Highest vendor id declared in the GVL (0 when empty).
  int max_vendor_id() const;
  const Vendor* FindVendor(int id) const;

  // Folds another fragment in. Throws Error{kDuplicateId} on id collisions.
  VendorRegistry& Merge(const VendorRegistry& fragment);
  // Replaces the compiled-in purpose names/descriptions.
  void OverridePurposes(std::vector<Purpose> purposes);
  void set_options(RegistryOptions options) { options_ = std::move(options); }

  CmpIdentity IdentifyCmp(int id) const;
  bool HasConsentBasedVendor(const ConsentString& consent) const;

 private:
  friend VendorRegistry LoadVendorList(std::string_view document);
  friend VendorRegistry LoadCmpList(std::string_view document);

  RegistryOptions options_;
  std::optional<int> gvl_version_;
  std::map<int, Vendor> vendors_;
  std::map<int, Cmp> cmps_;
  std::map<int, Purpose> purposes_;
};

// GVL JSON: {vendorListVersion, vendors: [{id, name, purposeIds,
// legIntPurposeIds}]}. Extra fields are ignored.
// Throws Error{kSchemaError | kDuplicateId}.
VendorRegistry LoadVendorList(std::string_view document);

// CMP list JSON: {cmps: [{id, name}]} or the map-shaped {cmps: {"<id>":
// {name} | "<name>"}}. Throws Error{kSchemaError | kDuplicateId}.
VendorRegistry LoadCmpList(std::string_view document);

// Purpose override file: {purposes: [{id, name, description}]} with exactly
// ids 1..5.
std::vector<Purpose> LoadPurposes(std::string_view document);

VendorRegistry BuildRegistry(std::string_view gvl_document,
                             std::string_view cmp_document,
                             RegistryOptions options = {});

}  // namespace tcfaudit
