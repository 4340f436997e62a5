#include "blockiot/ledger/tx.hpp"

#include <algorithm>

#include "blockiot/core/hex.hpp"

namespace blockiot::ledger {

std::string_view tx_kind_name(TxKind k) {
  switch (k) {
    case TxKind::DataTransfer: return "data_transfer";
    case TxKind::AccessGrant: return "access_grant";
    case TxKind::AccessRevoke: return "access_revoke";
    case TxKind::AlertEvent: return "alert_event";
    case TxKind::SummaryPublished: return "summary_published";
  }
  return "data_transfer";
}

std::optional<TxKind> tx_kind_from_name(std::string_view s) {
  if (s == "data_transfer") return TxKind::DataTransfer;
  if (s == "access_grant") return TxKind::AccessGrant;
  if (s == "access_revoke") return TxKind::AccessRevoke;
  if (s == "alert_event") return TxKind::AlertEvent;
  if (s == "summary_published") return TxKind::SummaryPublished;
  return std::nullopt;
}

namespace {

Json content_json(const TransferTransaction &t) {
  return Json{{"issued_at", format_timestamp(t.issued_at)},
              {"kind", std::string(tx_kind_name(t.kind))},
              {"patient_key", digest_hex(t.patient_key)},
              {"payload_address", t.payload_address.hex()},
              {"signer", t.signer}};
}

} // namespace

std::string TransferTransaction::signing_payload() const {
  return canonical_dump(content_json(*this));
}

Digest32 TransferTransaction::computed_id() const {
  Json j = content_json(*this);
  j["signature"] = to_hex(signature);
  return sha256(canonical_dump(j));
}

Json TransferTransaction::to_json() const {
  Json j = content_json(*this);
  j["signature"] = to_hex(signature);
  j["tx_id"] = digest_hex(tx_id);
  return j;
}

TransferTransaction tx_from_json(const Json &j) {
  if (!j.is_object() || j.size() != 7)
    throw CodecError("transaction: expected exactly 7 fields");
  TransferTransaction t;
  t.tx_id = require_digest(j, "tx_id");
  auto kind = tx_kind_from_name(require_string(j, "kind"));
  if (!kind) throw CodecError("transaction: unknown kind");
  t.kind = *kind;
  t.patient_key = require_digest(j, "patient_key");
  t.payload_address = require_address(j, "payload_address");
  t.issued_at = require_timestamp(j, "issued_at");
  t.signer = require_string(j, "signer");
  auto sig = from_hex(require_string(j, "signature"));
  if (!sig || sig->size() != t.signature.size())
    throw CodecError("transaction: bad signature encoding");
  std::copy(sig->begin(), sig->end(), t.signature.begin());
  return t;
}

TransferTransaction make_tx(TxKind kind, const PatientKey &patient,
                            const cas::ContentAddress &payload,
                            TimestampMs issued_at, const std::string &signer,
                            const cas::SecretKey &sk) {
  TransferTransaction t;
  t.kind = kind;
  t.patient_key = patient;
  t.payload_address = payload;
  t.issued_at = issued_at;
  t.signer = signer;
  t.signature = cas::sign(sk, t.signing_payload());
  t.tx_id = t.computed_id();
  return t;
}

} // namespace blockiot::ledger
