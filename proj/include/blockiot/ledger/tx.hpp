#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "blockiot/cas/keys.hpp"
#include "blockiot/core/json.hpp"

namespace blockiot::ledger {

enum class TxKind {
  DataTransfer,
  AccessGrant,
  AccessRevoke,
  AlertEvent,
  SummaryPublished,
};

std::string_view tx_kind_name(TxKind k);
std::optional<TxKind> tx_kind_from_name(std::string_view s);

// A signed ledger entry. tx_id covers every other field including the
// signature, so any mutation anywhere in the record changes the id.
struct TransferTransaction {
  Digest32 tx_id{};
  TxKind kind = TxKind::DataTransfer;
  PatientKey patient_key{};
  cas::ContentAddress payload_address;
  TimestampMs issued_at = 0;
  std::string signer;
  cas::Signature signature{};

  // Canonical bytes the signature is computed over (content fields only).
  std::string signing_payload() const;
  Digest32 computed_id() const;

  Json to_json() const;
  bool operator==(const TransferTransaction &) const = default;
};

TransferTransaction tx_from_json(const Json &j);

TransferTransaction make_tx(TxKind kind, const PatientKey &patient,
                            const cas::ContentAddress &payload,
                            TimestampMs issued_at, const std::string &signer,
                            const cas::SecretKey &sk);

// Registered signing keys by principal id. Transactions from principals
// missing here never validate.
struct KeyDirectory {
  std::map<std::string, cas::PublicKey, std::less<>> keys;

  void put(const std::string &id, const cas::PublicKey &pk) { keys[id] = pk; }
  const cas::PublicKey *find(std::string_view id) const {
    auto it = keys.find(id);
    return it == keys.end() ? nullptr : &it->second;
  }
};

} // namespace blockiot::ledger
