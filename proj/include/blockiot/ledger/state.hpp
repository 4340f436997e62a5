#pragma once

#include <functional>
#include <set>

#include "blockiot/cas/store.hpp"
#include "blockiot/contracts/access.hpp"
#include "blockiot/contracts/engine.hpp"
#include "blockiot/ledger/block.hpp"

namespace blockiot::ledger {

// Block does not extend the applied chain.
struct LinkageError : std::runtime_error {
  explicit LinkageError(const std::string &what) : std::runtime_error(what) {}
};

// Block content cannot be applied (unresolvable payload, replayed tx).
struct ApplyError : std::runtime_error {
  explicit ApplyError(const std::string &what) : std::runtime_error(what) {}
};

// Replay state. state_digest covers only chain-determined content (grants,
// summaries, alerts); block timestamps, nonces, and heights stay out so
// independently mined chains over the same transactions agree.
struct LedgerState {
  contracts::AccessTable access;
  std::map<std::string, std::string> summaries; // patient hex -> report addr
  std::vector<Json> alerts;                     // chain order, deduplicated
  std::set<std::string> alert_keys;
  std::set<std::string> applied_tx;
  std::uint64_t next_height = 0;
  Digest32 tip{}; // all-zeros before the first block

  Json state_json() const;
  Digest32 state_digest() const;
};

// Active contracts per patient key (hex).
using ContractDirectory =
    std::map<std::string, std::vector<contracts::ContractSpec>>;

// apply_block resolves payload documents through store and runs per-batch
// contracts from contracts. notify fires once per newly recorded alert;
// leave it empty on replay so notifications never repeat.
struct ApplyContext {
  cas::Store *store = nullptr;
  const ContractDirectory *contracts = nullptr;
  std::function<void(const contracts::AlertEvent &)> notify;
};

// Grant and revoke payload documents stored in the CAS.
struct AccessChange {
  std::string grantee;
  std::vector<contracts::AccessAction> actions;
};

Json access_change_to_json(const AccessChange &c);
AccessChange access_change_from_json(const Json &j);

// Batch documents only need their observation address list here; the
// gateway adds bookkeeping fields, which apply_block ignores.
std::vector<CanonicalObservation> load_batch_observations(
    cas::Store &store, const cas::ContentAddress &batch_doc);

void apply_block(LedgerState &state, const Block &block,
                 const ApplyContext &ctx);

} // namespace blockiot::ledger
