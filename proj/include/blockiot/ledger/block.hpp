#pragma once

#include <cstdint>
#include <vector>

#include "blockiot/ledger/tx.hpp"

namespace blockiot::ledger {

inline constexpr int kMaxDifficultyBits = 24;

// hash is the header hash, stored redundantly so that serialized chains are
// tamper-evident even where the proof-of-work check alone would be
// probabilistic (a lucky nonce flip on the tip block).
struct Block {
  std::uint64_t height = 0;
  Digest32 hash{};
  Digest32 prev_hash{}; // all-zeros for genesis
  Digest32 merkle_root{};
  TimestampMs timestamp = 0;
  std::uint64_t nonce = 0;
  int difficulty_bits = 0;
  std::vector<TransferTransaction> transactions;

  Digest32 header_hash() const;
  Json to_json() const;
  bool operator==(const Block &) const = default;
};

Block block_from_json(const Json &j);

// Binary tree over tx_ids in block order: pairs hash to H(left || right),
// an odd node is promoted unchanged, no transactions gives all-zeros.
Digest32 merkle_root_of(const std::vector<TransferTransaction> &txs);

// hash < 2^(256 - difficulty_bits), i.e. the top difficulty_bits bits are
// zero. Zero bits accepts everything.
bool meets_target(const Digest32 &h, int difficulty_bits);

// Orders transactions by (issued_at, tx_id) and searches nonces from 0, so
// identical inputs always seal identical blocks.
Block seal_block(std::vector<TransferTransaction> txs, const Block *prev,
                 int difficulty_bits, TimestampMs timestamp);

struct ValidationResult {
  bool ok = true;
  std::uint64_t first_invalid = 0; // meaningful only when !ok
};

// Checks every block and transaction invariant over the whole chain,
// including chain-wide tx_id uniqueness.
ValidationResult validate_chain(const std::vector<Block> &blocks,
                                const KeyDirectory &keys);

// Cumulative work, 2^difficulty_bits per block.
std::uint64_t chain_work(const std::vector<Block> &blocks);

// Chain file codec: one canonical JSON object per line.
std::string chain_to_lines(const std::vector<Block> &blocks);
std::vector<Block> chain_from_lines(std::string_view text);

} // namespace blockiot::ledger
