#include "blockiot/ledger/block.hpp"

#include <algorithm>
#include <set>

namespace blockiot::ledger {

namespace {

Json header_json(const Block &b) {
  return Json{{"difficulty_bits", b.difficulty_bits},
              {"height", b.height},
              {"merkle_root", digest_hex(b.merkle_root)},
              {"nonce", b.nonce},
              {"prev_hash", digest_hex(b.prev_hash)},
              {"timestamp", format_timestamp(b.timestamp)}};
}

bool tx_order_lt(const TransferTransaction &a, const TransferTransaction &b) {
  if (a.issued_at != b.issued_at) return a.issued_at < b.issued_at;
  return a.tx_id < b.tx_id;
}

} // namespace

Digest32 Block::header_hash() const {
  return sha256(canonical_dump(header_json(*this)));
}

Json Block::to_json() const {
  Json j = header_json(*this);
  j["hash"] = digest_hex(hash);
  Json txs = Json::array();
  for (const auto &t : transactions) txs.push_back(t.to_json());
  j["transactions"] = std::move(txs);
  return j;
}

Block block_from_json(const Json &j) {
  if (!j.is_object() || j.size() != 8)
    throw CodecError("block: expected exactly 8 fields");
  Block b;
  auto height = require_int(j, "height");
  if (height < 0) throw CodecError("block: negative height");
  b.height = static_cast<std::uint64_t>(height);
  b.hash = require_digest(j, "hash");
  b.prev_hash = require_digest(j, "prev_hash");
  b.merkle_root = require_digest(j, "merkle_root");
  b.timestamp = require_timestamp(j, "timestamp");
  auto nonce = require_int(j, "nonce");
  if (nonce < 0) throw CodecError("block: negative nonce");
  b.nonce = static_cast<std::uint64_t>(nonce);
  auto bits = require_int(j, "difficulty_bits");
  if (bits < 0 || bits > 255) throw CodecError("block: bad difficulty_bits");
  b.difficulty_bits = static_cast<int>(bits);
  const Json &txs = require_field(j, "transactions");
  if (!txs.is_array()) throw CodecError("block: transactions not an array");
  for (const auto &t : txs) b.transactions.push_back(tx_from_json(t));
  return b;
}

Digest32 merkle_root_of(const std::vector<TransferTransaction> &txs) {
  if (txs.empty()) return Digest32{};
  std::vector<Digest32> level;
  level.reserve(txs.size());
  for (const auto &t : txs) level.push_back(t.tx_id);
  while (level.size() > 1) {
    std::vector<Digest32> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      std::array<std::uint8_t, 64> pair{};
      std::copy(level[i].begin(), level[i].end(), pair.begin());
      std::copy(level[i + 1].begin(), level[i + 1].end(), pair.begin() + 32);
      next.push_back(sha256(std::span<const std::uint8_t>(pair)));
    }
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  return level[0];
}

bool meets_target(const Digest32 &h, int difficulty_bits) {
  if (difficulty_bits <= 0) return true;
  int full = difficulty_bits / 8;
  int rem = difficulty_bits % 8;
  for (int i = 0; i < full; ++i)
    if (h[static_cast<std::size_t>(i)] != 0) return false;
  if (rem == 0) return true;
  if (full >= 32) return false;
  return (h[static_cast<std::size_t>(full)] >> (8 - rem)) == 0;
}

Block seal_block(std::vector<TransferTransaction> txs, const Block *prev,
                 int difficulty_bits, TimestampMs timestamp) {
  std::sort(txs.begin(), txs.end(), tx_order_lt);
  Block b;
  b.height = prev ? prev->height + 1 : 0;
  b.prev_hash = prev ? prev->header_hash() : Digest32{};
  b.merkle_root = merkle_root_of(txs);
  b.timestamp = timestamp;
  b.difficulty_bits = difficulty_bits;
  b.transactions = std::move(txs);
  for (b.nonce = 0;; ++b.nonce) {
    b.hash = b.header_hash();
    if (meets_target(b.hash, difficulty_bits)) return b;
  }
}

ValidationResult validate_chain(const std::vector<Block> &blocks,
                                const KeyDirectory &keys) {
  std::set<Digest32> seen_tx;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block &b = blocks[i];
    auto bad = [&] { return ValidationResult{false, b.height}; };
    if (b.height != i) return ValidationResult{false, i};
    Digest32 expected_prev =
        i == 0 ? Digest32{} : blocks[i - 1].header_hash();
    if (b.prev_hash != expected_prev) return bad();
    if (b.hash != b.header_hash()) return bad();
    if (!meets_target(b.hash, b.difficulty_bits)) return bad();
    if (b.merkle_root != merkle_root_of(b.transactions)) return bad();
    for (std::size_t t = 0; t < b.transactions.size(); ++t) {
      const TransferTransaction &tx = b.transactions[t];
      if (t > 0 && !tx_order_lt(b.transactions[t - 1], tx)) return bad();
      if (tx.tx_id != tx.computed_id()) return bad();
      if (!seen_tx.insert(tx.tx_id).second) return bad();
      const cas::PublicKey *pk = keys.find(tx.signer);
      if (!pk || !cas::verify(*pk, tx.signing_payload(), tx.signature))
        return bad();
    }
  }
  return ValidationResult{};
}

std::uint64_t chain_work(const std::vector<Block> &blocks) {
  std::uint64_t work = 0;
  for (const auto &b : blocks)
    work += std::uint64_t{1} << std::min(b.difficulty_bits, 63);
  return work;
}

std::string chain_to_lines(const std::vector<Block> &blocks) {
  std::string out;
  for (const auto &b : blocks) {
    out += canonical_dump(b.to_json());
    out += '\n';
  }
  return out;
}

std::vector<Block> chain_from_lines(std::string_view text) {
  std::vector<Block> blocks;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      throw CodecError("chain file: missing trailing newline");
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw CodecError("chain file: bad JSON line");
    blocks.push_back(block_from_json(j));
  }
  return blocks;
}

} // namespace blockiot::ledger
