#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "blockiot/core/json.hpp"
#include "blockiot/core/types.hpp"

namespace blockiot::contracts {

enum class AccessAction { Read, Write, Publish };

std::string_view access_action_name(AccessAction a);
std::optional<AccessAction> access_action_from_name(std::string_view s);

// An authenticated caller. own_patient is set when the principal IS a
// patient (or a device acting for one); it grants unconditional access to
// that patient's own data.
struct Principal {
  std::string id;
  std::optional<PatientKey> own_patient;
};

// Grant table replayed from the ledger. Deterministic iteration order so
// the serialized form feeds the state digest.
class AccessTable {
public:
  void grant(const PatientKey &patient, const std::string &principal,
             AccessAction action);
  void revoke(const PatientKey &patient, const std::string &principal,
              AccessAction action);

  bool has_grant(const PatientKey &patient, const std::string &principal,
                 AccessAction action) const;

  // Sorted (patient hex, principal, action) triples.
  Json to_json() const;
  bool operator==(const AccessTable &) const = default;

private:
  std::map<std::string, std::map<std::string, std::set<AccessAction>>> grants_;
};

bool check_access(const AccessTable &table, const Principal &who,
                  const PatientKey &patient, AccessAction action);

} // namespace blockiot::contracts
