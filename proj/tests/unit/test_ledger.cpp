#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

#include "blockiot/cas/store.hpp"
#include "blockiot/ledger/node.hpp"

using namespace blockiot;
using namespace blockiot::ledger;

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir() {
  static std::atomic<int> counter{0};
  auto p = fs::temp_directory_path() /
           ("blockiot-ledger-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)));
  fs::create_directories(p);
  return p;
}

struct TempDir {
  fs::path path = fresh_dir();
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

cas::Seed seed_of(std::uint8_t fill) {
  cas::Seed s{};
  s.fill(fill);
  return s;
}

const cas::KeyPair kAlice = cas::KeyPair::from_seed(seed_of(1));
const cas::KeyPair kBob = cas::KeyPair::from_seed(seed_of(2));
const PatientKey kPatient = sha256("pat|one|1980-01-01");
constexpr TimestampMs kT0 = 1'700'000'000'000;

KeyDirectory directory() {
  KeyDirectory d;
  d.put("alice", kAlice.public_key);
  d.put("bob", kBob.public_key);
  return d;
}

TransferTransaction tx_at(TimestampMs issued_at, const std::string &tag,
                          TxKind kind = TxKind::DataTransfer) {
  return make_tx(kind, kPatient, cas::ContentAddress::of(tag), issued_at,
                 "alice", kAlice.secret_key);
}

std::vector<Block> build_chain(int blocks, int txs_per_block,
                               int difficulty_bits) {
  std::vector<Block> chain;
  int n = 0;
  for (int i = 0; i < blocks; ++i) {
    std::vector<TransferTransaction> txs;
    for (int t = 0; t < txs_per_block; ++t)
      txs.push_back(tx_at(kT0 + n, "payload " + std::to_string(n))), ++n;
    chain.push_back(seal_block(std::move(txs),
                               chain.empty() ? nullptr : &chain.back(),
                               difficulty_bits, kT0 + i));
  }
  return chain;
}

} // namespace

TEST_CASE("transaction identity and signatures") {
  auto tx = tx_at(kT0, "hello");
  CHECK(tx.tx_id == tx.computed_id());
  CHECK(cas::verify(kAlice.public_key, tx.signing_payload(), tx.signature));

  // Deterministic signing: identical inputs give the identical transaction.
  CHECK(tx_at(kT0, "hello") == tx);
  CHECK(tx_at(kT0, "other").tx_id != tx.tx_id);

  auto round = tx_from_json(tx.to_json());
  CHECK(round == tx);
  CHECK(canonical_dump(round.to_json()) == canonical_dump(tx.to_json()));

  SUBCASE("strict decoding") {
    auto j = tx.to_json();
    j["kind"] = "mystery";
    CHECK_THROWS_AS(tx_from_json(j), CodecError);
    j = tx.to_json();
    j["extra"] = 1;
    CHECK_THROWS_AS(tx_from_json(j), CodecError);
    j = tx.to_json();
    j.erase("signer");
    CHECK_THROWS_AS(tx_from_json(j), CodecError);
  }
}

TEST_CASE("merkle root construction") {
  CHECK(merkle_root_of({}) == Digest32{});

  auto a = tx_at(kT0, "a"), b = tx_at(kT0 + 1, "b"), c = tx_at(kT0 + 2, "c");
  CHECK(merkle_root_of({a}) == a.tx_id);

  auto pair_hash = [](const Digest32 &l, const Digest32 &r) {
    std::array<std::uint8_t, 64> buf{};
    std::copy(l.begin(), l.end(), buf.begin());
    std::copy(r.begin(), r.end(), buf.begin() + 32);
    return sha256(std::span<const std::uint8_t>(buf));
  };
  CHECK(merkle_root_of({a, b}) == pair_hash(a.tx_id, b.tx_id));
  CHECK(merkle_root_of({a, b, c}) ==
        pair_hash(pair_hash(a.tx_id, b.tx_id), c.tx_id));
  CHECK(merkle_root_of({a, b}) != merkle_root_of({b, a}));
}

TEST_CASE("proof of work target") {
  Digest32 zero{};
  CHECK(meets_target(zero, 0));
  CHECK(meets_target(zero, 24));

  Digest32 d{};
  d[0] = 0x01; // leading 7 zero bits
  CHECK(meets_target(d, 7));
  CHECK_FALSE(meets_target(d, 8));

  d = Digest32{};
  d[1] = 0x80; // exactly 8 leading zero bits
  CHECK(meets_target(d, 8));
  CHECK_FALSE(meets_target(d, 9));
}

TEST_CASE("seal_block") {
  auto a = tx_at(kT0 + 5, "a"), b = tx_at(kT0 + 1, "b");

  SUBCASE("difficulty 0 accepts the first nonce") {
    auto blk = seal_block({a}, nullptr, 0, kT0);
    CHECK(blk.nonce == 0);
    CHECK(blk.height == 0);
    CHECK(blk.prev_hash == Digest32{});
    CHECK(blk.hash == blk.header_hash());
  }

  SUBCASE("difficulty 8 yields 8 leading zero bits") {
    auto blk = seal_block({a, b}, nullptr, 8, kT0);
    auto recomputed = blk.header_hash();
    CHECK(recomputed == blk.hash);
    CHECK(recomputed[0] == 0);
    CHECK(meets_target(recomputed, 8));
  }

  SUBCASE("transactions ordered by issued_at then tx_id") {
    auto blk = seal_block({a, b}, nullptr, 0, kT0);
    REQUIRE(blk.transactions.size() == 2);
    CHECK(blk.transactions[0] == b); // earlier issued_at first
    CHECK(blk.transactions[1] == a);
    CHECK(blk.merkle_root == merkle_root_of(blk.transactions));
  }

  SUBCASE("identical inputs seal identical blocks") {
    auto one = seal_block({a, b}, nullptr, 10, kT0);
    auto two = seal_block({b, a}, nullptr, 10, kT0);
    CHECK(one == two);
  }

  SUBCASE("chained heights and prev hashes") {
    auto g = seal_block({a}, nullptr, 4, kT0);
    auto next = seal_block({b}, &g, 4, kT0 + 1);
    CHECK(next.height == 1);
    CHECK(next.prev_hash == g.header_hash());
  }
}

TEST_CASE("validate_chain verdicts") {
  auto keys = directory();
  auto chain = build_chain(10, 3, 4);
  CHECK(validate_chain(chain, keys).ok);

  SUBCASE("nonce zeroed without rehashing") {
    chain[5].nonce = 0;
    auto v = validate_chain(chain, keys);
    REQUIRE_FALSE(v.ok);
    CHECK(v.first_invalid == 5);
  }

  SUBCASE("nonce zeroed with the hash honestly recomputed") {
    // Difficulty 0 so the forged header still meets its target; the break
    // must then surface as a linkage failure at the next block.
    auto easy = build_chain(4, 1, 0);
    easy[2].nonce += 1;
    easy[2].hash = easy[2].header_hash();
    auto v = validate_chain(easy, keys);
    REQUIRE_FALSE(v.ok);
    CHECK(v.first_invalid == 3);
  }

  SUBCASE("stripped signature") {
    auto easy = build_chain(4, 2, 0);
    auto &tx = easy[2].transactions[1];
    tx.signature = cas::Signature{};
    tx.tx_id = tx.computed_id();
    easy[2].merkle_root = merkle_root_of(easy[2].transactions);
    easy[2].hash = easy[2].header_hash();
    easy[3].prev_hash = easy[2].header_hash();
    easy[3].hash = easy[3].header_hash();
    auto v = validate_chain(easy, keys);
    REQUIRE_FALSE(v.ok);
    CHECK(v.first_invalid == 2);
  }

  SUBCASE("unknown signer") {
    KeyDirectory empty;
    auto v = validate_chain(chain, empty);
    REQUIRE_FALSE(v.ok);
    CHECK(v.first_invalid == 0);
  }

  SUBCASE("duplicate transaction across blocks") {
    auto tx = tx_at(kT0 + 999, "dup");
    std::vector<Block> dup;
    dup.push_back(seal_block({tx}, nullptr, 0, kT0));
    dup.push_back(seal_block({tx}, &dup[0], 0, kT0 + 1));
    auto v = validate_chain(dup, keys);
    REQUIRE_FALSE(v.ok);
    CHECK(v.first_invalid == 1);
  }

  SUBCASE("wrong height") {
    chain[7].height = 8;
    CHECK_FALSE(validate_chain(chain, keys).ok);
  }

  SUBCASE("chain file round-trip") {
    auto text = chain_to_lines(chain);
    auto back = chain_from_lines(text);
    CHECK(back == chain);
    CHECK(chain_to_lines(back) == text);
  }
}

TEST_CASE("any single bit flip in a serialized chain fails validation") {
  auto keys = directory();
  auto chain = build_chain(8, 2, 4);
  REQUIRE(validate_chain(chain, keys).ok);
  const std::string text = chain_to_lines(chain);

  std::mt19937_64 rng(0xb17f11b);
  std::uniform_int_distribution<std::size_t> pos(0, text.size() * 8 - 1);
  int caught = 0;
  const int kFlips = 2'000;
  for (int i = 0; i < kFlips; ++i) {
    std::string mutated = text;
    std::size_t bit = pos(rng);
    mutated[bit / 8] = static_cast<char>(
        static_cast<unsigned char>(mutated[bit / 8]) ^ (1u << (bit % 8)));
    try {
      auto blocks = chain_from_lines(mutated);
      if (!validate_chain(blocks, keys).ok) ++caught;
    } catch (const CodecError &) {
      ++caught; // unparseable is detected too
    }
  }
  CHECK(caught == kFlips);
}

TEST_CASE("apply_block state transitions") {
  TempDir dir;
  cas::Store store(dir.path / "store");
  ContractDirectory contracts;

  // Adverse-condition contract for the patient.
  contracts::ContractSpec adverse;
  adverse.kind = contracts::ContractKind::AdverseCondition;
  adverse.patient_key = kPatient;
  contracts[digest_hex(kPatient)].push_back(adverse);

  int notified = 0;
  ApplyContext ctx{&store, &contracts,
                   [&](const contracts::AlertEvent &) { ++notified; }};

  // Payload documents.
  auto grant_addr = store.put(canonical_dump(
      access_change_to_json({"provider:dr-a",
                             {contracts::AccessAction::Read,
                              contracts::AccessAction::Write}})));
  auto revoke_addr = store.put(canonical_dump(
      access_change_to_json({"provider:dr-a",
                             {contracts::AccessAction::Write}})));

  CanonicalObservation hr;
  hr.subject = kPatient;
  hr.device = {"P1", "HR10-1", 147842};
  hr.effective_time = kT0;
  hr.kind = MeasurementKind::Scalar;
  hr.value = ScalarValue{150, "/min"};
  hr.code_binding = "heart-rate";
  hr.provenance = cas::ContentAddress::of("raw hr payload");
  auto obs_addr = store.put(canonical_dump(observation_to_json(hr)));
  auto batch_addr = store.put(canonical_dump(
      Json{{"observations", Json::array({obs_addr.hex()})}}));

  auto t1 = make_tx(TxKind::AccessGrant, kPatient, grant_addr, kT0, "alice",
                    kAlice.secret_key);
  auto t2 = make_tx(TxKind::AccessRevoke, kPatient, revoke_addr, kT0 + 1,
                    "alice", kAlice.secret_key);
  auto t3 = make_tx(TxKind::DataTransfer, kPatient, batch_addr, kT0 + 2,
                    "alice", kAlice.secret_key);
  auto summary_addr = store.put("summary report body");
  auto t4 = make_tx(TxKind::SummaryPublished, kPatient, summary_addr,
                    kT0 + 3, "bob", kBob.secret_key);

  LedgerState state;
  auto b0 = seal_block({t1}, nullptr, 0, kT0);
  apply_block(state, b0, ctx);
  CHECK(state.access.has_grant(kPatient, "provider:dr-a",
                               contracts::AccessAction::Read));
  CHECK(state.access.has_grant(kPatient, "provider:dr-a",
                               contracts::AccessAction::Write));

  auto b1 = seal_block({t2, t3, t4}, &b0, 0, kT0 + 1);
  apply_block(state, b1, ctx);
  CHECK(state.access.has_grant(kPatient, "provider:dr-a",
                               contracts::AccessAction::Read));
  CHECK_FALSE(state.access.has_grant(kPatient, "provider:dr-a",
                                     contracts::AccessAction::Write));
  CHECK(state.summaries.at(digest_hex(kPatient)) == summary_addr.hex());
  REQUIRE(state.alerts.size() == 1); // 150 bpm breached the default bounds
  CHECK(notified == 1);

  SUBCASE("replay reproduces the digest with notifications suppressed") {
    ApplyContext silent{&store, &contracts, nullptr};
    LedgerState replayed;
    apply_block(replayed, b0, silent);
    apply_block(replayed, b1, silent);
    CHECK(replayed.state_digest() == state.state_digest());
    CHECK(notified == 1);
  }

  SUBCASE("non-chaining block is a linkage error") {
    CHECK_THROWS_AS(apply_block(state, b0, ctx), LinkageError);
    auto stray = seal_block({tx_at(kT0 + 9, "stray")}, nullptr, 0, kT0);
    CHECK_THROWS_AS(apply_block(state, stray, ctx), LinkageError);
  }

  SUBCASE("duplicate alert content records once") {
    // A second batch carrying the same observation: same provenance, same
    // dedup key, no new alert.
    auto batch2 = store.put(canonical_dump(
        Json{{"observations", Json::array({obs_addr.hex()})},
             {"note", "redelivery"}}));
    auto t5 = make_tx(TxKind::DataTransfer, kPatient, batch2, kT0 + 4,
                      "alice", kAlice.secret_key);
    auto b2 = seal_block({t5}, &b1, 0, kT0 + 2);
    apply_block(state, b2, ctx);
    CHECK(state.alerts.size() == 1);
    CHECK(notified == 1);
  }
}

TEST_CASE("ledger node lifecycle") {
  TempDir dir;
  auto keys = directory();
  LedgerParams params;
  params.difficulty_bits = 4;
  params.batch_size = 3;

  auto chain_path = dir.path / "chain.jsonl";
  Ledger node(chain_path, keys, params, ApplyContext{});

  SUBCASE("submit validates and dedups") {
    auto tx = tx_at(kT0, "a");
    auto r1 = node.submit_tx(tx);
    CHECK(r1.accepted);
    auto r2 = node.submit_tx(tx);
    CHECK_FALSE(r2.accepted);
    CHECK(r2.reason == "duplicate");

    auto forged = tx;
    forged.payload_address = cas::ContentAddress::of("tampered");
    forged.tx_id = forged.computed_id(); // id fixed up, signature stale
    auto r3 = node.submit_tx(forged);
    CHECK_FALSE(r3.accepted);
    CHECK(r3.reason == "bad signature");

    auto mangled = tx;
    mangled.issued_at += 1; // id no longer matches content
    auto r4 = node.submit_tx(mangled);
    CHECK_FALSE(r4.accepted);
    CHECK(r4.reason == "bad tx id");

    auto stranger = make_tx(TxKind::DataTransfer, kPatient,
                            cas::ContentAddress::of("x"), kT0, "mallory",
                            kAlice.secret_key);
    auto r5 = node.submit_tx(stranger);
    CHECK_FALSE(r5.accepted);
    CHECK(r5.reason == "unknown signer");

    CHECK(node.mempool_size() == 1);
  }

  SUBCASE("seal, persist, restart") {
    CHECK_FALSE(node.seal(kT0).has_value()); // nothing to seal
    node.submit_tx(tx_at(kT0, "a"));
    node.submit_tx(tx_at(kT0 + 1, "b"));
    CHECK_FALSE(node.seal_due()); // batch_size is 3
    node.submit_tx(tx_at(kT0 + 2, "c"));
    CHECK(node.seal_due());
    auto blk = node.seal(kT0 + 10);
    REQUIRE(blk.has_value());
    CHECK(blk->transactions.size() == 3);
    CHECK(node.mempool_size() == 0);
    CHECK(node.height() == 1);

    node.submit_tx(tx_at(kT0 + 3, "d"));
    node.seal(kT0 + 11);
    CHECK(node.height() == 2);

    // A sealed transaction never re-enters the pool.
    auto again = node.submit_tx(tx_at(kT0, "a"));
    CHECK_FALSE(again.accepted);
    CHECK(again.reason == "duplicate");

    auto digest_before = node.state_digest();
    auto chain_before = node.chain_snapshot();

    Ledger reopened(chain_path, keys, params, ApplyContext{});
    CHECK(reopened.height() == 2);
    CHECK(reopened.state_digest() == digest_before);
    CHECK(reopened.chain_snapshot() == chain_before);

    // Tampering with the persisted file is caught on startup.
    auto text = chain_to_lines(chain_before);
    auto at = text.find("\"nonce\"") + 8;
    text[at] = text[at] == '1' ? '2' : '1';
    std::ofstream(chain_path, std::ios::binary | std::ios::trunc) << text;
    CHECK_THROWS_AS(Ledger(chain_path, keys, params, ApplyContext{}),
                    ApplyError);
  }
}

TEST_CASE("fork choice converges two nodes") {
  TempDir dir;
  auto keys = directory();
  LedgerParams params;
  params.difficulty_bits = 4;

  Ledger a(dir.path / "a.jsonl", keys, params, ApplyContext{});
  Ledger b(dir.path / "b.jsonl", keys, params, ApplyContext{});

  // Shared prefix.
  auto common = tx_at(kT0, "common");
  a.submit_tx(common);
  b.submit_tx(common);
  a.seal(kT0 + 1);
  b.seal(kT0 + 1);
  CHECK(a.chain_snapshot() == b.chain_snapshot()); // deterministic sealing

  // Divergence: b mines two blocks to a's one.
  a.submit_tx(tx_at(kT0 + 2, "a-branch"));
  a.seal(kT0 + 3);
  b.submit_tx(tx_at(kT0 + 4, "b-branch-1"));
  b.seal(kT0 + 5);
  b.submit_tx(tx_at(kT0 + 6, "b-branch-2"));
  b.seal(kT0 + 7);
  CHECK(a.height() == 2);
  CHECK(b.height() == 3);

  // Exchange chains; only the lighter node reorganizes.
  CHECK_FALSE(b.adopt_chain(a.chain_snapshot()));
  CHECK(a.adopt_chain(b.chain_snapshot()));
  CHECK(a.chain_snapshot() == b.chain_snapshot());
  CHECK(a.state_digest() == b.state_digest());

  // The orphaned branch transaction is back in a's pool, the common one
  // is not.
  CHECK(a.mempool_size() == 1);
  auto requeued = a.submit_tx(tx_at(kT0 + 2, "a-branch"));
  CHECK_FALSE(requeued.accepted);
  CHECK(requeued.reason == "duplicate");

  SUBCASE("equal work ties break toward the lower tip hash") {
    Ledger c(dir.path / "c.jsonl", keys, params, ApplyContext{});
    Ledger d(dir.path / "d.jsonl", keys, params, ApplyContext{});
    c.submit_tx(tx_at(kT0 + 8, "c-only"));
    c.seal(kT0 + 9);
    d.submit_tx(tx_at(kT0 + 10, "d-only"));
    d.seal(kT0 + 11);
    REQUIRE(c.work() == d.work());

    bool c_adopted = c.adopt_chain(d.chain_snapshot());
    bool d_adopted = d.adopt_chain(c.chain_snapshot());
    CHECK(c_adopted != d_adopted); // exactly one side moves
    CHECK(c.chain_snapshot() == d.chain_snapshot());
  }

  SUBCASE("invalid candidate chains are never adopted") {
    auto forged = b.chain_snapshot();
    forged.push_back(forged.back()); // repeated block cannot validate
    CHECK_FALSE(a.adopt_chain(forged));

    forged = b.chain_snapshot();
    forged[1].transactions.clear();
    CHECK_FALSE(a.adopt_chain(forged));
  }
}
