#include "blockiot/ledger/node.hpp"

#include <fstream>
#include <sstream>

namespace blockiot::ledger {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ApplyError("cannot read chain file: " + p.string());
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

LedgerState replay(const std::vector<Block> &blocks, const ApplyContext &ctx) {
  ApplyContext silent = ctx;
  silent.notify = nullptr;
  LedgerState state;
  for (const auto &b : blocks) apply_block(state, b, silent);
  return state;
}

} // namespace

Ledger::Ledger(fs::path chain_file, KeyDirectory keys, LedgerParams params,
               ApplyContext ctx)
    : chain_file_(std::move(chain_file)),
      keys_(std::move(keys)),
      params_(params),
      ctx_(std::move(ctx)) {
  if (params_.difficulty_bits < 0 ||
      params_.difficulty_bits > kMaxDifficultyBits)
    throw ApplyError("difficulty_bits out of range");
  if (fs::exists(chain_file_)) {
    chain_ = chain_from_lines(read_file(chain_file_));
    auto verdict = validate_chain(chain_, keys_);
    if (!verdict.ok)
      throw ApplyError("chain file invalid at height " +
                       std::to_string(verdict.first_invalid));
  } else if (!chain_file_.parent_path().empty()) {
    fs::create_directories(chain_file_.parent_path());
  }
  state_ = std::make_shared<const LedgerState>(replay(chain_, ctx_));
}

SubmitResult Ledger::submit_tx(const TransferTransaction &tx) {
  if (tx.tx_id != tx.computed_id()) return {false, "bad tx id"};
  const cas::PublicKey *pk = keys_.find(tx.signer);
  if (!pk) return {false, "unknown signer"};
  if (!cas::verify(*pk, tx.signing_payload(), tx.signature))
    return {false, "bad signature"};
  std::lock_guard lock(mu_);
  if (state_->applied_tx.count(digest_hex(tx.tx_id)))
    return {false, "duplicate"};
  if (!mempool_.emplace(tx.tx_id, tx).second) return {false, "duplicate"};
  return {true, ""};
}

std::size_t Ledger::mempool_size() const {
  std::lock_guard lock(mu_);
  return mempool_.size();
}

bool Ledger::seal_due() const {
  std::lock_guard lock(mu_);
  return mempool_.size() >= params_.batch_size;
}

std::optional<Block> Ledger::seal(TimestampMs timestamp, bool allow_empty) {
  std::lock_guard lock(mu_);
  if (mempool_.empty() && !allow_empty) return std::nullopt;
  std::vector<TransferTransaction> txs;
  txs.reserve(mempool_.size());
  for (auto &[id, tx] : mempool_) txs.push_back(tx);

  const Block *prev = chain_.empty() ? nullptr : &chain_.back();
  Block block =
      seal_block(std::move(txs), prev, params_.difficulty_bits, timestamp);

  LedgerState next = *state_;
  apply_block(next, block, ctx_);
  persist_append(block);
  chain_.push_back(std::move(block));
  mempool_.clear();
  publish_state(std::move(next));
  return chain_.back();
}

std::vector<Block> Ledger::chain_snapshot() const {
  std::lock_guard lock(mu_);
  return chain_;
}

std::shared_ptr<const LedgerState> Ledger::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

Digest32 Ledger::state_digest() const { return state()->state_digest(); }

std::uint64_t Ledger::height() const {
  std::lock_guard lock(mu_);
  return chain_.size();
}

std::uint64_t Ledger::work() const {
  std::lock_guard lock(mu_);
  return chain_work(chain_);
}

bool Ledger::adopt_chain(const std::vector<Block> &candidate) {
  auto verdict = validate_chain(candidate, keys_);
  if (!verdict.ok) return false;

  std::lock_guard lock(mu_);
  std::uint64_t mine = chain_work(chain_);
  std::uint64_t theirs = chain_work(candidate);
  if (theirs < mine) return false;
  if (theirs == mine) {
    if (candidate.empty() || chain_.empty()) return false;
    if (!(candidate.back().header_hash() < chain_.back().header_hash()))
      return false;
  }

  LedgerState next = replay(candidate, ctx_);

  // Transactions mined only on the abandoned branch go back to the pool.
  for (const auto &b : chain_)
    for (const auto &tx : b.transactions)
      if (!next.applied_tx.count(digest_hex(tx.tx_id)))
        mempool_.emplace(tx.tx_id, tx);
  for (auto it = mempool_.begin(); it != mempool_.end();)
    it = next.applied_tx.count(digest_hex(it->first)) ? mempool_.erase(it)
                                                      : std::next(it);

  persist_rewrite(candidate);
  chain_ = candidate;
  publish_state(std::move(next));
  return true;
}

void Ledger::persist_append(const Block &b) {
  std::ofstream out(chain_file_, std::ios::binary | std::ios::app);
  if (!out) throw ApplyError("cannot append to chain file");
  out << canonical_dump(b.to_json()) << '\n';
  out.flush();
  if (!out) throw ApplyError("chain file write failed");
}

void Ledger::persist_rewrite(const std::vector<Block> &blocks) {
  fs::path tmp = chain_file_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ApplyError("cannot write chain file");
    out << chain_to_lines(blocks);
    out.flush();
    if (!out) throw ApplyError("chain file write failed");
  }
  fs::rename(tmp, chain_file_);
}

void Ledger::publish_state(LedgerState next) {
  state_ = std::make_shared<const LedgerState>(std::move(next));
}

} // namespace blockiot::ledger
