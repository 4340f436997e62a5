#include "blockiot/gateway/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "blockiot/templates/mapper.hpp"

namespace blockiot::gateway {

namespace fs = std::filesystem;

Json IngestReceipt::to_json() const {
  Json rej = Json::array();
  for (const auto &r : rejected)
    rej.push_back(Json{{"index", r.index}, {"reason", r.reason}});
  return Json{{"accepted", accepted},
              {"batch_id", digest_hex(batch_id)},
              {"ledger_tx", ledger_tx ? Json(digest_hex(*ledger_tx)) : Json()},
              {"rejected", std::move(rej)}};
}

IngestReceipt receipt_from_json(const Json &j) {
  IngestReceipt r;
  r.batch_id = require_digest(j, "batch_id");
  auto accepted = require_int(j, "accepted");
  if (accepted < 0) throw CodecError("receipt: negative accepted count");
  r.accepted = static_cast<std::size_t>(accepted);
  const Json &tx = require_field(j, "ledger_tx");
  if (!tx.is_null()) {
    Digest32 d;
    if (!tx.is_string() || !digest_from_hex(tx.get<std::string>(), d))
      throw CodecError("receipt: bad ledger_tx");
    r.ledger_tx = d;
  }
  const Json &rej = require_field(j, "rejected");
  if (!rej.is_array()) throw CodecError("receipt: rejected not an array");
  for (const auto &e : rej) {
    auto index = require_int(e, "index");
    if (index < 0) throw CodecError("receipt: negative index");
    r.rejected.push_back(
        {static_cast<std::size_t>(index), require_string(e, "reason")});
  }
  return r;
}

Pipeline::Pipeline(cas::Store &store, cas::NameIndex &names,
                   ledger::Ledger &ledger,
                   const templates::TemplateRegistry &templates,
                   const Registration &registration, PipelineConfig config,
                   fs::path receipts_dir)
    : store_(store),
      names_(names),
      ledger_(ledger),
      templates_(templates),
      registration_(registration),
      config_(config),
      receipts_dir_(std::move(receipts_dir)) {
  fs::create_directories(receipts_dir_);
}

std::vector<Json> Pipeline::parse_batch_body(std::string_view body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) throw RequestError("body is not JSON");
  const Json *list = nullptr;
  if (j.is_array()) {
    list = &j;
  } else if (j.is_object()) {
    auto it = j.find("payloads");
    if (it == j.end() || !it->is_array())
      throw RequestError("body needs a payloads array");
    list = &*it;
  } else {
    throw RequestError("body must be a batch array or object");
  }
  std::vector<Json> payloads;
  payloads.reserve(list->size());
  for (const auto &p : *list) {
    if (!p.is_object())
      throw RequestError("every payload must be a JSON object");
    payloads.push_back(p);
  }
  return payloads;
}

std::optional<IngestReceipt> Pipeline::stored_receipt(
    const Digest32 &batch_id) const {
  fs::path p = receipts_dir_ / (digest_hex(batch_id) + ".json");
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  Json j = Json::parse(buf.str(), nullptr, false);
  if (j.is_discarded())
    throw cas::IntegrityError("receipt file corrupt: " + p.string());
  return receipt_from_json(j);
}

void Pipeline::persist_receipt(const IngestReceipt &receipt) const {
  fs::path final = receipts_dir_ / (digest_hex(receipt.batch_id) + ".json");
  fs::path tmp = final;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << canonical_dump(receipt.to_json());
    out.flush();
    if (!out) throw cas::IoError("cannot write receipt: " + tmp.string());
  }
  fs::rename(tmp, final);
}

std::size_t Pipeline::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

IngestReceipt Pipeline::ingest(const RegisteredDevice &device,
                               const std::vector<Json> &payloads,
                               TimestampMs received_at) {
  if (payloads.empty()) throw RequestError("payloads non-empty");
  if (payloads.size() > config_.max_batch_payloads)
    throw OversizeError("batch exceeds " +
                        std::to_string(config_.max_batch_payloads) +
                        " payloads");

  Json arr = Json::array();
  for (const auto &p : payloads) arr.push_back(p);
  std::string canonical = canonical_dump(arr);
  if (canonical.size() > config_.max_batch_bytes)
    throw OversizeError("batch exceeds " +
                        std::to_string(config_.max_batch_bytes) + " bytes");

  IngestReceipt receipt;
  receipt.batch_id = sha256(canonical);

  // QoS-1 style redelivery: replay the receipt, touch nothing.
  if (auto prior = stored_receipt(receipt.batch_id)) return *prior;

  {
    std::lock_guard lock(mu_);
    if (in_flight_ >= config_.max_in_flight)
      throw BusyError("intake at capacity, retry");
    ++in_flight_;
  }
  struct Gate {
    Pipeline *p;
    ~Gate() {
      std::lock_guard lock(p->mu_);
      --p->in_flight_;
    }
  } gate{this};

  const RegisteredPatient &patient = registration_.patient_of(device);
  auto tmpl = templates_.find(device.template_id);

  std::vector<std::size_t> accepted_ix;
  std::vector<CanonicalObservation> observations;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    if (!tmpl) {
      receipt.rejected.push_back({i, "mapping error"});
      continue;
    }
    std::string pid, did;
    try {
      std::tie(pid, did) = templates::extract_identity(*tmpl, payloads[i]);
    } catch (const templates::IdentityError &) {
      receipt.rejected.push_back({i, "identity error"});
      continue;
    }
    if (pid != device.patient_id || did != device.device_id) {
      receipt.rejected.push_back({i, "authorization error"});
      continue;
    }
    auto result = templates::map_payload(*tmpl, payloads[i], received_at,
                                         patient.identity.patient_key);
    if (!result.field_errors.empty() || result.observations.empty()) {
      receipt.rejected.push_back({i, "mapping error"});
      continue;
    }
    accepted_ix.push_back(i);
    for (auto &o : result.observations) observations.push_back(std::move(o));
  }
  receipt.accepted = accepted_ix.size();

  std::lock_guard lock(mu_);
  if (!observations.empty()) {
    // Raw payloads first so every provenance address resolves.
    for (std::size_t i : accepted_ix) store_.put(canonical_dump(payloads[i]));

    Json obs_list = Json::array();
    for (const auto &o : observations)
      obs_list.push_back(store_.put(canonical_dump(observation_to_json(o)))
                             .hex());
    std::string doc = canonical_dump(
        Json{{"batch_id", digest_hex(receipt.batch_id)},
             {"device", device.device_id},
             {"observations", std::move(obs_list)},
             {"patient_key", digest_hex(patient.identity.patient_key)}});
    cas::ContentAddress batch_addr = store_.put(doc);

    std::optional<cas::ContentAddress> root;
    try {
      root = names_.resolve(patient.identity.patient_key,
                            patient.name_keys().public_key);
    } catch (const cas::NotFoundError &) {
    }
    cas::ContentAddress new_root = cas::add_entries(
        store_, root ? &*root : nullptr,
        {{"batch-" + digest_hex(receipt.batch_id), batch_addr, doc.size()}});
    if (!root || new_root != *root)
      names_.publish(patient.identity.patient_key, patient.name_keys(),
                     new_root);

    TimestampMs issued_at = observations[0].effective_time;
    for (const auto &o : observations)
      issued_at = std::max(issued_at, o.effective_time);
    auto tx = ledger::make_tx(ledger::TxKind::DataTransfer,
                              patient.identity.patient_key, batch_addr,
                              issued_at, registration_.gateway_signer(),
                              registration_.gateway_keys().secret_key);
    auto verdict = ledger_.submit_tx(tx);
    if (verdict.accepted || verdict.reason == "duplicate")
      receipt.ledger_tx = tx.tx_id;
  }
  persist_receipt(receipt);
  return receipt;
}

} // namespace blockiot::gateway
