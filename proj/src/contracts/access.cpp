#include "blockiot/contracts/access.hpp"

namespace blockiot::contracts {

std::string_view access_action_name(AccessAction a) {
  switch (a) {
    case AccessAction::Read: return "read";
    case AccessAction::Write: return "write";
    case AccessAction::Publish: return "publish";
  }
  return "read";
}

std::optional<AccessAction> access_action_from_name(std::string_view s) {
  if (s == "read") return AccessAction::Read;
  if (s == "write") return AccessAction::Write;
  if (s == "publish") return AccessAction::Publish;
  return std::nullopt;
}

void AccessTable::grant(const PatientKey &patient, const std::string &principal,
                        AccessAction action) {
  grants_[digest_hex(patient)][principal].insert(action);
}

void AccessTable::revoke(const PatientKey &patient,
                         const std::string &principal, AccessAction action) {
  auto p = grants_.find(digest_hex(patient));
  if (p == grants_.end()) return;
  auto q = p->second.find(principal);
  if (q == p->second.end()) return;
  q->second.erase(action);
  if (q->second.empty()) p->second.erase(q);
  if (p->second.empty()) grants_.erase(p);
}

bool AccessTable::has_grant(const PatientKey &patient,
                            const std::string &principal,
                            AccessAction action) const {
  auto p = grants_.find(digest_hex(patient));
  if (p == grants_.end()) return false;
  auto q = p->second.find(principal);
  if (q == p->second.end()) return false;
  return q->second.count(action) > 0;
}

Json AccessTable::to_json() const {
  Json arr = Json::array();
  for (const auto &[patient, principals] : grants_)
    for (const auto &[principal, actions] : principals)
      for (AccessAction a : actions)
        arr.push_back(Json::array(
            {patient, principal, std::string(access_action_name(a))}));
  return arr;
}

bool check_access(const AccessTable &table, const Principal &who,
                  const PatientKey &patient, AccessAction action) {
  if (who.own_patient && *who.own_patient == patient) return true;
  return table.has_grant(patient, who.id, action);
}

} // namespace blockiot::contracts
