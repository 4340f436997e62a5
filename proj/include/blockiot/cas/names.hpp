#pragma once

#include <mutex>
#include <optional>

#include "blockiot/cas/keys.hpp"
#include "blockiot/cas/store.hpp"
#include "blockiot/core/types.hpp"

namespace blockiot::cas {

// Signed mutable pointer from a stable patient key to the latest folder
// root. The biometric digest selects the record; the registered key pair
// authenticates it.
struct NameRecord {
  PatientKey name_key{};
  ContentAddress root;
  std::uint64_t sequence = 0;
  PublicKey public_key{};
  Signature signature{};

  std::string signed_payload() const;
  bool operator==(const NameRecord &) const = default;
};

// Append-only per-name logs under <store root>/names/<hex-key>.log, one
// JSON record per line. The latest valid (highest-sequence) record wins;
// the first record's public key pins the name unless a trusted key is
// supplied by the caller.
class NameIndex {
public:
  explicit NameIndex(std::filesystem::path names_dir);

  // sequence = latest + 1, serialized per index.
  NameRecord publish(const PatientKey &name_key, const KeyPair &signer,
                     const ContentAddress &root);

  // Compare-and-set variant: fails with ConflictError when the latest
  // sequence is not expected_prev (a concurrent publish won the race).
  NameRecord publish_cas(const PatientKey &name_key, const KeyPair &signer,
                         const ContentAddress &root,
                         std::uint64_t expected_prev);

  // Test/tool hook: append a record without signing or sequence checks.
  void append_raw(const NameRecord &record);

  ContentAddress resolve(const PatientKey &name_key) const;
  ContentAddress resolve(const PatientKey &name_key,
                         const PublicKey &trusted) const;

  std::optional<std::uint64_t> latest_sequence(const PatientKey &name_key) const;
  std::vector<NameRecord> history(const PatientKey &name_key) const;

private:
  NameRecord publish_locked(const PatientKey &name_key, const KeyPair &signer,
                            const ContentAddress &root,
                            std::optional<std::uint64_t> expected_prev);
  std::filesystem::path log_path(const PatientKey &name_key) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

} // namespace blockiot::cas
