#include "blockiot/ledger/state.hpp"

namespace blockiot::ledger {

Json LedgerState::state_json() const {
  Json alert_arr = Json::array();
  for (const auto &a : alerts) alert_arr.push_back(a);
  return Json{{"access", access.to_json()},
              {"alerts", std::move(alert_arr)},
              {"summaries", Json(summaries)}};
}

Digest32 LedgerState::state_digest() const {
  return sha256(canonical_dump(state_json()));
}

Json access_change_to_json(const AccessChange &c) {
  Json actions = Json::array();
  for (auto a : c.actions)
    actions.push_back(std::string(contracts::access_action_name(a)));
  return Json{{"actions", std::move(actions)}, {"grantee", c.grantee}};
}

AccessChange access_change_from_json(const Json &j) {
  AccessChange c;
  c.grantee = require_string(j, "grantee");
  const Json &actions = require_field(j, "actions");
  if (!actions.is_array() || actions.empty())
    throw CodecError("access change: actions must be a non-empty array");
  for (const auto &a : actions) {
    if (!a.is_string()) throw CodecError("access change: action not a string");
    auto act = contracts::access_action_from_name(a.get<std::string>());
    if (!act) throw CodecError("access change: unknown action");
    c.actions.push_back(*act);
  }
  return c;
}

namespace {

Json parse_stored_json(cas::Store &store, const cas::ContentAddress &addr,
                       const char *what) {
  auto bytes = store.get(addr);
  Json j = Json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded())
    throw ApplyError(std::string(what) + " document is not JSON: " +
                     addr.hex());
  return j;
}

void record_alert(LedgerState &state, const contracts::AlertEvent &event,
                  const ApplyContext &ctx) {
  if (!state.alert_keys.insert(event.dedup_key()).second) return;
  state.alerts.push_back(event.to_json());
  if (ctx.notify) ctx.notify(event);
}

void run_batch_contracts(LedgerState &state, const TransferTransaction &tx,
                         const ApplyContext &ctx) {
  if (!ctx.contracts) return;
  auto it = ctx.contracts->find(digest_hex(tx.patient_key));
  if (it == ctx.contracts->end() || it->second.empty()) return;
  if (!ctx.store)
    throw ApplyError("data_transfer needs a store to run contracts");
  auto obs = load_batch_observations(*ctx.store, tx.payload_address);
  for (const auto &spec : it->second) {
    switch (spec.kind) {
      case contracts::ContractKind::AdverseCondition: {
        if (auto alert = contracts::eval_adverse_condition(obs, spec))
          record_alert(state, *alert, ctx);
        break;
      }
      case contracts::ContractKind::EmergencyAlert: {
        for (const auto &alert : contracts::eval_emergency(obs, spec))
          record_alert(state, alert, ctx);
        break;
      }
      default:
        // Compliance and summarization run over query windows, not single
        // batches; their results arrive as alert_event / summary_published
        // transactions. Access control has no per-batch behavior.
        break;
    }
  }
}

} // namespace

std::vector<CanonicalObservation> load_batch_observations(
    cas::Store &store, const cas::ContentAddress &batch_doc) {
  Json doc = parse_stored_json(store, batch_doc, "batch");
  const Json &list = require_field(doc, "observations");
  if (!list.is_array()) throw ApplyError("batch: observations not an array");
  std::vector<CanonicalObservation> obs;
  obs.reserve(list.size());
  for (const auto &entry : list) {
    if (!entry.is_string()) throw ApplyError("batch: address not a string");
    auto addr = cas::ContentAddress::from_hex(entry.get<std::string>());
    if (!addr) throw ApplyError("batch: bad observation address");
    obs.push_back(
        observation_from_json(parse_stored_json(store, *addr, "observation")));
  }
  return obs;
}

void apply_block(LedgerState &state, const Block &block,
                 const ApplyContext &ctx) {
  if (block.height != state.next_height)
    throw LinkageError("block height " + std::to_string(block.height) +
                       " does not extend height " +
                       std::to_string(state.next_height));
  Digest32 expected_prev = state.next_height == 0 ? Digest32{} : state.tip;
  if (block.prev_hash != expected_prev)
    throw LinkageError("block prev_hash does not match the tip");

  for (const auto &tx : block.transactions) {
    if (!state.applied_tx.insert(digest_hex(tx.tx_id)).second)
      throw ApplyError("transaction replays: " + digest_hex(tx.tx_id));
    switch (tx.kind) {
      case TxKind::AccessGrant:
      case TxKind::AccessRevoke: {
        if (!ctx.store)
          throw ApplyError("access change needs a store for its payload");
        auto change = access_change_from_json(
            parse_stored_json(*ctx.store, tx.payload_address, "access"));
        for (auto action : change.actions) {
          if (tx.kind == TxKind::AccessGrant)
            state.access.grant(tx.patient_key, change.grantee, action);
          else
            state.access.revoke(tx.patient_key, change.grantee, action);
        }
        break;
      }
      case TxKind::AlertEvent: {
        if (!ctx.store)
          throw ApplyError("alert_event needs a store for its payload");
        auto event = contracts::alert_event_from_json(
            parse_stored_json(*ctx.store, tx.payload_address, "alert"));
        record_alert(state, event, ctx);
        break;
      }
      case TxKind::SummaryPublished: {
        state.summaries[digest_hex(tx.patient_key)] =
            tx.payload_address.hex();
        break;
      }
      case TxKind::DataTransfer: {
        run_batch_contracts(state, tx, ctx);
        break;
      }
    }
  }

  state.next_height = block.height + 1;
  state.tip = block.header_hash();
}

} // namespace blockiot::ledger
