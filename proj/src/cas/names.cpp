#include "blockiot/cas/names.hpp"

#include <algorithm>
#include <fstream>

#include "blockiot/core/hex.hpp"
#include "blockiot/core/json.hpp"

namespace blockiot::cas {

std::string NameRecord::signed_payload() const {
  // Everything except the signature itself, in a fixed order.
  std::string out;
  out.reserve(2 * (32 + 34 + 32) + 24);
  out += to_hex(name_key);
  out += '|';
  out += root.hex();
  out += '|';
  out += std::to_string(sequence);
  out += '|';
  out += to_hex(public_key);
  return out;
}

namespace {

Json record_to_json(const NameRecord &r) {
  return Json{{"name_key", to_hex(r.name_key)},
              {"root", r.root.hex()},
              {"sequence", r.sequence},
              {"public_key", to_hex(r.public_key)},
              {"signature", to_hex(r.signature)}};
}

NameRecord record_from_json(const Json &j) {
  NameRecord r;
  r.name_key = require_digest(j, "name_key");
  r.root = require_address(j, "root");
  const auto &seq = require_field(j, "sequence");
  if (!seq.is_number_unsigned())
    throw CodecError("sequence: expected a non-negative integer");
  r.sequence = seq.get<std::uint64_t>();
  auto pk = from_hex(require_string(j, "public_key"));
  if (!pk || pk->size() != r.public_key.size())
    throw CodecError("public_key: expected 64 hex characters");
  std::copy(pk->begin(), pk->end(), r.public_key.begin());
  auto sig = from_hex(require_string(j, "signature"));
  if (!sig || sig->size() != r.signature.size())
    throw CodecError("signature: expected 128 hex characters");
  std::copy(sig->begin(), sig->end(), r.signature.begin());
  return r;
}

} // namespace

NameIndex::NameIndex(std::filesystem::path names_dir) : dir_(std::move(names_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec)
    throw IoError("cannot create names directory " + dir_.string() + ": " +
                  ec.message());
}

std::filesystem::path NameIndex::log_path(const PatientKey &name_key) const {
  return dir_ / (to_hex(name_key) + ".log");
}

std::vector<NameRecord> NameIndex::history(const PatientKey &name_key) const {
  std::vector<NameRecord> out;
  std::ifstream in(log_path(name_key));
  if (!in.is_open())
    return out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    try {
      out.push_back(record_from_json(Json::parse(line)));
    } catch (const std::exception &e) {
      throw IntegrityError("name log " + log_path(name_key).string() +
                           " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::optional<std::uint64_t>
NameIndex::latest_sequence(const PatientKey &name_key) const {
  std::lock_guard lock(mu_);
  auto records = history(name_key);
  if (records.empty())
    return std::nullopt;
  std::uint64_t best = 0;
  for (const auto &r : records)
    best = std::max(best, r.sequence);
  return best;
}

namespace {

// Verifies every record against the name's authentic key and returns the
// winner (highest sequence; ties go to the later log entry). Any record
// that fails verification is treated as log tampering, not skipped: a
// resolver that silently drops forged entries would mask the attack.
NameRecord checked_latest(const std::vector<NameRecord> &records,
                          const PublicKey &key, const PatientKey &name_key) {
  const NameRecord *best = nullptr;
  for (const auto &r : records) {
    if (r.public_key != key)
      throw IntegrityError("name " + to_hex(name_key) +
                           ": record signed by an unexpected key");
    if (!verify(key, r.signed_payload(), r.signature))
      throw IntegrityError("name " + to_hex(name_key) +
                           ": record signature does not verify");
    if (!best || r.sequence >= best->sequence)
      best = &r;
  }
  return *best;
}

} // namespace

ContentAddress NameIndex::resolve(const PatientKey &name_key) const {
  std::lock_guard lock(mu_);
  auto records = history(name_key);
  if (records.empty())
    throw NotFoundError("no record for name " + to_hex(name_key));
  // Without an externally trusted key the first record pins the name.
  return checked_latest(records, records.front().public_key, name_key).root;
}

ContentAddress NameIndex::resolve(const PatientKey &name_key,
                                  const PublicKey &trusted) const {
  std::lock_guard lock(mu_);
  auto records = history(name_key);
  if (records.empty())
    throw NotFoundError("no record for name " + to_hex(name_key));
  return checked_latest(records, trusted, name_key).root;
}

NameRecord NameIndex::publish(const PatientKey &name_key, const KeyPair &signer,
                              const ContentAddress &root) {
  std::lock_guard lock(mu_);
  return publish_locked(name_key, signer, root, std::nullopt);
}

NameRecord NameIndex::publish_cas(const PatientKey &name_key,
                                  const KeyPair &signer,
                                  const ContentAddress &root,
                                  std::uint64_t expected_prev) {
  std::lock_guard lock(mu_);
  return publish_locked(name_key, signer, root, expected_prev);
}

NameRecord NameIndex::publish_locked(const PatientKey &name_key,
                                     const KeyPair &signer,
                                     const ContentAddress &root,
                                     std::optional<std::uint64_t> expected_prev) {
  auto records = history(name_key);
  std::uint64_t latest = 0;
  for (const auto &r : records)
    latest = std::max(latest, r.sequence);
  if (expected_prev && !records.empty() && latest != *expected_prev)
    throw ConflictError("retryable conflict: name " + to_hex(name_key) +
                        " is at sequence " + std::to_string(latest) +
                        ", expected " + std::to_string(*expected_prev));
  if (expected_prev && records.empty() && *expected_prev != 0)
    throw ConflictError("retryable conflict: name " + to_hex(name_key) +
                        " has no records, expected sequence " +
                        std::to_string(*expected_prev));

  NameRecord r;
  r.name_key = name_key;
  r.root = root;
  r.sequence = records.empty() ? 1 : latest + 1;
  r.public_key = signer.public_key;
  r.signature = sign(signer.secret_key, r.signed_payload());

  std::ofstream out(log_path(name_key), std::ios::app);
  if (!out.is_open())
    throw IoError("cannot open name log " + log_path(name_key).string());
  out << canonical_dump(record_to_json(r)) << '\n';
  out.flush();
  if (!out.good())
    throw IoError("write failed on name log " + log_path(name_key).string());
  return r;
}

void NameIndex::append_raw(const NameRecord &record) {
  std::lock_guard lock(mu_);
  std::ofstream out(log_path(record.name_key), std::ios::app);
  if (!out.is_open())
    throw IoError("cannot open name log " + log_path(record.name_key).string());
  out << canonical_dump(record_to_json(record)) << '\n';
}

} // namespace blockiot::cas
