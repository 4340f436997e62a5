#pragma once

#include <filesystem>
#include <memory>
#include <mutex>

#include "blockiot/ledger/state.hpp"

namespace blockiot::ledger {

struct LedgerParams {
  int difficulty_bits = 12;    // 0..kMaxDifficultyBits
  std::size_t batch_size = 10; // seal once the mempool reaches this
  double interval_seconds = 5; // or this much time passes (runtime timer)
};

struct SubmitResult {
  bool accepted = false;
  std::string reason; // empty when accepted
};

// Chain writer for one node: mempool, persistence, replay, fork choice.
// submit_tx is safe from any thread; sealing and adoption serialize on an
// internal mutex; state() hands out immutable snapshots.
class Ledger {
public:
  // Loads and validates chain_file if present and replays it through ctx
  // (with notifications suppressed). Throws ApplyError on an invalid file.
  Ledger(std::filesystem::path chain_file, KeyDirectory keys,
         LedgerParams params, ApplyContext ctx);

  SubmitResult submit_tx(const TransferTransaction &tx);
  std::size_t mempool_size() const;
  bool seal_due() const; // mempool reached batch_size

  // Seals the current mempool into the next block, applies and persists
  // it. Returns nothing when the mempool is empty and allow_empty is off.
  std::optional<Block> seal(TimestampMs timestamp, bool allow_empty = false);

  std::vector<Block> chain_snapshot() const;
  std::shared_ptr<const LedgerState> state() const;
  Digest32 state_digest() const;
  std::uint64_t height() const;
  std::uint64_t work() const;

  // Longest-valid-chain rule: adopts candidate when it carries strictly
  // more cumulative work, or equal work and a lower tip hash. Replays the
  // whole candidate (notifications suppressed), rewrites the chain file,
  // and re-queues orphaned transactions. Returns whether adopted.
  bool adopt_chain(const std::vector<Block> &candidate);

  const LedgerParams &params() const { return params_; }
  const KeyDirectory &keys() const { return keys_; }

private:
  void persist_append(const Block &b);
  void persist_rewrite(const std::vector<Block> &blocks);
  void publish_state(LedgerState next);

  std::filesystem::path chain_file_;
  KeyDirectory keys_;
  LedgerParams params_;
  ApplyContext ctx_;

  mutable std::mutex mu_;
  std::map<Digest32, TransferTransaction> mempool_;
  std::vector<Block> chain_;
  std::shared_ptr<const LedgerState> state_;
};

} // namespace blockiot::ledger
