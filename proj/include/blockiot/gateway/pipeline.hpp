#pragma once

#include <filesystem>
#include <mutex>
#include <optional>

#include "blockiot/cas/folder.hpp"
#include "blockiot/cas/names.hpp"
#include "blockiot/gateway/registration.hpp"
#include "blockiot/ledger/node.hpp"
#include "blockiot/templates/registry.hpp"

namespace blockiot::gateway {

// Malformed request body (400-class).
struct RequestError : std::runtime_error {
  explicit RequestError(const std::string &what) : std::runtime_error(what) {}
};

// Batch over the configured limits (413-class).
struct OversizeError : std::runtime_error {
  explicit OversizeError(const std::string &what)
      : std::runtime_error(what) {}
};

// Intake at capacity; the sender should retry (503-class).
struct BusyError : std::runtime_error {
  explicit BusyError(const std::string &what) : std::runtime_error(what) {}
};

struct PipelineConfig {
  std::size_t max_batch_payloads = 256;
  std::size_t max_batch_bytes = 1 << 20; // transports enforce this one
  std::size_t max_in_flight = 64;
};

struct RejectedPayload {
  std::size_t index = 0;
  std::string reason;
  bool operator==(const RejectedPayload &) const = default;
};

struct IngestReceipt {
  Digest32 batch_id{};
  std::size_t accepted = 0;
  std::vector<RejectedPayload> rejected;
  std::optional<Digest32> ledger_tx;
  // Present with ledger_tx: the anchored batch document and the tx's
  // issued_at. Together they rebuild the transaction bit-for-bit, which is
  // how a redelivery heals a mempool lost to a crash before sealing.
  std::optional<cas::ContentAddress> batch_doc;
  std::optional<TimestampMs> issued_at;

  Json to_json() const;
  bool operator==(const IngestReceipt &) const = default;
};

IngestReceipt receipt_from_json(const Json &j);

// Transport-independent ingest: transports authenticate and unframe, then
// everything downstream of (device, payloads, received_at) is shared, which
// is what makes the three transports byte-equivalent.
//
// Pipeline steps per batch: payload canonicalization and batch_id, receipt
// dedup, per-payload identity/authorization/mapping, observation and batch
// document storage, patient folder update, name publish, one data_transfer
// transaction. The transaction's issued_at is the latest observation time,
// so replays and re-sends reproduce it exactly.
class Pipeline {
public:
  Pipeline(cas::Store &store, cas::NameIndex &names, ledger::Ledger &ledger,
           const templates::TemplateRegistry &templates,
           const Registration &registration, PipelineConfig config,
           std::filesystem::path receipts_dir);

  IngestReceipt ingest(const RegisteredDevice &device,
                       const std::vector<Json> &payloads,
                       TimestampMs received_at);

  // Parses a transport body: either a bare JSON array of payload objects
  // or {"payloads": [...]}. Throws RequestError.
  static std::vector<Json> parse_batch_body(std::string_view body);

  const PipelineConfig &config() const { return config_; }

  std::size_t in_flight() const;

private:
  std::optional<IngestReceipt> stored_receipt(const Digest32 &batch_id) const;
  void persist_receipt(const IngestReceipt &receipt) const;
  void requeue_tx(const RegisteredDevice &device,
                  const IngestReceipt &receipt);

  cas::Store &store_;
  cas::NameIndex &names_;
  ledger::Ledger &ledger_;
  const templates::TemplateRegistry &templates_;
  const Registration &registration_;
  PipelineConfig config_;
  std::filesystem::path receipts_dir_;

  mutable std::mutex mu_; // commit section + in-flight counter
  std::size_t in_flight_ = 0;
};

} // namespace blockiot::gateway
