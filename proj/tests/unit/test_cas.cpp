#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "blockiot/cas/folder.hpp"
#include "blockiot/cas/names.hpp"
#include "blockiot/cas/store.hpp"
#include "blockiot/core/hex.hpp"

using namespace blockiot;
using namespace blockiot::cas;
namespace fs = std::filesystem;

namespace {

// Fresh store root per test case so cases cannot contaminate each other.
struct TempStore {
  fs::path root;
  TempStore() {
    static std::atomic<int> n{0};
    root = fs::temp_directory_path() /
           ("blockiot-cas-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(n.fetch_add(1)));
    fs::remove_all(root);
  }
  ~TempStore() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
};

std::string random_bytes(std::mt19937_64 &rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  std::string s(len(rng), '\0');
  for (auto &c : s)
    c = static_cast<char>(byte(rng));
  return s;
}

} // namespace

TEST_CASE("put is deterministic and get round-trips") {
  TempStore t;
  Store store(t.root);

  auto a1 = store.put("hello cas");
  auto a2 = store.put("hello cas");
  CHECK(a1 == a2);
  CHECK(store.get(a1) == "hello cas");
  CHECK(store.object_count() == 1);

  // Degenerate input: empty bytes are storable and resolvable.
  auto empty = store.put("");
  CHECK(store.get(empty) == "");
  CHECK(store.object_size(empty) == 0);
  CHECK(empty != a1);
}

TEST_CASE("distinct content yields distinct addresses") {
  TempStore t;
  Store store(t.root);
  std::mt19937_64 rng(0x5eed);

  std::set<std::string> contents;
  std::set<std::string> addresses;
  for (int i = 0; i < 500; ++i) {
    auto bytes = random_bytes(rng, 256);
    contents.insert(bytes);
    addresses.insert(store.put(bytes).hex());
  }
  CHECK(addresses.size() == contents.size());
  for (const auto &hex : addresses) {
    auto addr = ContentAddress::from_hex(hex);
    REQUIRE(addr.has_value());
    CHECK(contents.count(store.get(*addr)) == 1);
  }
}

TEST_CASE("unknown address is not found") {
  TempStore t;
  Store store(t.root);
  auto addr = ContentAddress::of("never stored");
  CHECK_THROWS_AS(store.get(addr), NotFoundError);
  CHECK_THROWS_AS(store.object_size(addr), NotFoundError);
  CHECK_FALSE(store.contains(addr));
}

TEST_CASE("tampered backend file fails closed") {
  TempStore t;
  Store store(t.root);
  auto addr = store.put("patient batch 42");

  // Flip one byte in the backing file behind the store's back.
  {
    std::fstream f(store.object_path(addr),
                   std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.is_open());
    char c{};
    f.read(&c, 1);
    f.seekp(0);
    c = static_cast<char>(c ^ 0x01);
    f.write(&c, 1);
  }
  CHECK_THROWS_AS(store.get(addr), IntegrityError);
}

TEST_CASE("store digest fingerprints the sorted address list") {
  TempStore t;
  Store store(t.root);
  auto d0 = store.digest();

  store.put("a");
  store.put("b");
  auto d2 = store.digest();
  CHECK(d0 != d2);

  // Idempotent writes leave the fingerprint unchanged.
  store.put("a");
  CHECK(store.digest() == d2);

  // Oracle: digest of the newline-joined sorted hex addresses.
  std::string acc;
  for (const auto &a : store.list()) {
    acc += a.hex();
    acc += '\n';
  }
  CHECK(store.digest() == sha256(acc));
}

TEST_CASE("add_entry builds immutable directories") {
  TempStore t;
  Store store(t.root);

  auto child1 = store.put("reading one");
  auto child2 = store.put("reading two");

  auto root1 = add_entry(store, nullptr, "obs-1", child1);
  auto node1 = load_folder(store, root1);
  REQUIRE(node1.entries.size() == 1);
  CHECK(node1.entries[0].name == "obs-1");
  CHECK(node1.entries[0].address == child1);
  CHECK(node1.entries[0].size == store.object_size(child1));

  auto root2 = add_entry(store, &root1, "obs-2", child2);
  CHECK(root2 != root1);
  // Old root unchanged and still resolvable.
  auto node1_again = load_folder(store, root1);
  CHECK(node1_again.entries.size() == 1);
  CHECK(load_folder(store, root2).entries.size() == 2);

  // Determinism: same (name, child) on equal roots gives equal new roots.
  auto root2b = add_entry(store, &root1, "obs-2", child2);
  CHECK(root2b == root2);

  // Name collision is a conflict, not a silent overwrite.
  CHECK_THROWS_AS(add_entry(store, &root2, "obs-1", child2), ConflictError);
}

TEST_CASE("insertion order does not affect the root") {
  TempStore t;
  Store store(t.root);

  std::vector<std::pair<std::string, ContentAddress>> items;
  for (int i = 0; i < 5; ++i)
    items.emplace_back("entry-" + std::to_string(i),
                       store.put("content " + std::to_string(i)));

  std::sort(items.begin(), items.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });

  std::set<std::string> roots;
  int permutations = 0;
  do {
    const ContentAddress *root = nullptr;
    ContentAddress current;
    for (const auto &[name, child] : items) {
      current = add_entry(store, root, name, child);
      root = &current;
    }
    roots.insert(current.hex());
    ++permutations;
  } while (std::next_permutation(items.begin(), items.end(),
                                 [](const auto &a, const auto &b) {
                                   return a.first < b.first;
                                 }));

  CHECK(permutations == 120);
  CHECK(roots.size() == 1);
}

TEST_CASE("bulk insert stores only the final root") {
  TempStore t;
  Store store(t.root);

  auto c1 = store.put("one");
  auto c2 = store.put("two");
  auto c3 = store.put("three");
  auto before = store.object_count();

  auto root = add_entries(store, nullptr,
                          {{"a", c1, store.object_size(c1)},
                           {"b", c2, store.object_size(c2)},
                           {"c", c3, store.object_size(c3)}});
  CHECK(store.object_count() == before + 1);
  CHECK(load_folder(store, root).entries.size() == 3);

  // Re-adding identical pairs is a no-op; a different address under an
  // existing name is a conflict.
  auto same = add_entries(store, &root, {{"a", c1, store.object_size(c1)}});
  CHECK(same == root);
  CHECK_THROWS_AS(add_entries(store, &root, {{"a", c2, 3}}), ConflictError);

  // Equivalent single-entry inserts reach the same root.
  const ContentAddress *r = nullptr;
  ContentAddress acc;
  for (const auto &[name, child] :
       std::vector<std::pair<std::string, ContentAddress>>{
           {"a", c1}, {"b", c2}, {"c", c3}}) {
    acc = add_entry(store, r, name, child);
    r = &acc;
  }
  CHECK(acc == root);
}

TEST_CASE("audit walk recomputes every directory digest") {
  TempStore t;
  Store store(t.root);

  auto leaf1 = store.put("leaf one");
  auto leaf2 = store.put("leaf two");
  auto inner = add_entry(store, nullptr, "l1", leaf1);
  auto inner2 = add_entry(store, &inner, "l2", leaf2);
  auto top = add_entry(store, nullptr, "batch", inner2);

  CHECK(audit_tree(store, top) == 4); // top, inner2, two leaves

  // Corrupt the inner directory's backing file: audit must notice.
  {
    std::fstream f(store.object_path(inner2),
                   std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.is_open());
    f.seekp(5);
    f.write("\xff", 1);
  }
  CHECK_THROWS_AS(audit_tree(store, top), IntegrityError);
}

TEST_CASE("publish and resolve names") {
  TempStore t;
  Store store(t.root);
  NameIndex names(t.root / "names");
  auto kp = KeyPair::from_seed(Seed{1});

  PatientKey key = sha256("ada|lovelace|1815-12-10");

  CHECK_THROWS_AS(names.resolve(key), NotFoundError);

  auto r1 = store.put("root one");
  auto rec1 = names.publish(key, kp, r1);
  CHECK(rec1.sequence == 1);
  CHECK(names.resolve(key) == r1);

  auto r2 = store.put("root two");
  auto rec2 = names.publish(key, kp, r2);
  CHECK(rec2.sequence == 2);
  CHECK(rec2.name_key == rec1.name_key);
  CHECK(names.resolve(key) == r2);
  CHECK(names.resolve(key, kp.public_key) == r2);

  // Replaying the old record does not roll the name back.
  names.append_raw(rec1);
  CHECK(names.resolve(key) == r2);
}

TEST_CASE("name key is stable across a hundred publishes") {
  TempStore t;
  Store store(t.root);
  NameIndex names(t.root / "names");
  auto kp = KeyPair::from_seed(Seed{2});
  PatientKey key = sha256("grace|hopper|1906-12-09");

  std::vector<ContentAddress> roots;
  std::set<std::string> key_hexes;
  for (int i = 1; i <= 100; ++i) {
    auto root = store.put("generation " + std::to_string(i));
    auto rec = names.publish(key, kp, root);
    CHECK(rec.sequence == static_cast<std::uint64_t>(i));
    key_hexes.insert(to_hex(rec.name_key));
    roots.push_back(root);
  }
  CHECK(key_hexes.size() == 1);
  CHECK(names.latest_sequence(key) == 100);
  CHECK(names.resolve(key) == roots.back());

  // Every superseded root stays retrievable; only the pointer moved.
  std::set<std::string> distinct;
  for (const auto &r : roots) {
    distinct.insert(r.hex());
    CHECK(store.contains(r));
  }
  CHECK(distinct.size() == roots.size());
}

TEST_CASE("forged records are an integrity error") {
  TempStore t;
  Store store(t.root);
  NameIndex names(t.root / "names");
  auto owner = KeyPair::from_seed(Seed{3});
  auto attacker = KeyPair::from_seed(Seed{4});
  PatientKey key = sha256("mary|shelley|1797-08-30");

  auto good = store.put("authentic root");
  names.publish(key, owner, good);

  // A record signed with the wrong key, claiming the owner's key.
  NameRecord forged;
  forged.name_key = key;
  forged.root = store.put("attacker root");
  forged.sequence = 2;
  forged.public_key = owner.public_key;
  forged.signature = sign(attacker.secret_key, forged.signed_payload());
  names.append_raw(forged);

  CHECK_THROWS_AS(names.resolve(key), IntegrityError);
  CHECK_THROWS_AS(names.resolve(key, owner.public_key), IntegrityError);
}

TEST_CASE("records under a different key do not pass a pinned name") {
  TempStore t;
  Store store(t.root);
  NameIndex names(t.root / "names");
  auto owner = KeyPair::from_seed(Seed{5});
  auto attacker = KeyPair::from_seed(Seed{6});
  PatientKey key = sha256("alan|turing|1912-06-23");

  names.publish(key, owner, store.put("authentic"));

  // Attacker publishes under their own, self-consistent key pair. The
  // first record pinned the owner, so resolution must refuse.
  NameRecord hostile;
  hostile.name_key = key;
  hostile.root = store.put("hostile");
  hostile.sequence = 2;
  hostile.public_key = attacker.public_key;
  hostile.signature = sign(attacker.secret_key, hostile.signed_payload());
  names.append_raw(hostile);

  CHECK_THROWS_AS(names.resolve(key), IntegrityError);
  CHECK_THROWS_AS(names.resolve(key, owner.public_key), IntegrityError);
}

TEST_CASE("compare-and-set publish rejects stale sequences") {
  TempStore t;
  Store store(t.root);
  NameIndex names(t.root / "names");
  auto kp = KeyPair::from_seed(Seed{7});
  PatientKey key = sha256("nikola|tesla|1856-07-10");

  auto r1 = store.put("cas root 1");
  auto rec1 = names.publish_cas(key, kp, r1, 0);
  CHECK(rec1.sequence == 1);

  auto r2 = store.put("cas root 2");
  auto rec2 = names.publish_cas(key, kp, r2, rec1.sequence);
  CHECK(rec2.sequence == 2);

  // A publisher that lost the race must get a retryable conflict.
  CHECK_THROWS_AS(names.publish_cas(key, kp, r1, rec1.sequence),
                  ConflictError);
  CHECK(names.resolve(key) == r2);
}

TEST_CASE("signatures are deterministic for a fixed seed") {
  auto a = KeyPair::from_seed(Seed{9});
  auto b = KeyPair::from_seed(Seed{9});
  CHECK(a.public_key == b.public_key);
  CHECK(sign(a.secret_key, "msg") == sign(b.secret_key, "msg"));
  CHECK(verify(a.public_key, "msg", sign(a.secret_key, "msg")));
  CHECK_FALSE(verify(a.public_key, "other", sign(a.secret_key, "msg")));
}
