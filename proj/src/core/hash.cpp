#include "blockiot/core/hash.hpp"

#include <sodium.h>

#include "blockiot/core/hex.hpp"

namespace blockiot {

Digest32 sha256(std::span<const std::uint8_t> data) {
  Digest32 out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Digest32 sha256(std::string_view data) {
  return sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t *>(data.data()), data.size()));
}

std::string digest_hex(const Digest32 &d) {
  return to_hex(std::span<const std::uint8_t>(d.data(), d.size()));
}

bool digest_from_hex(std::string_view hex, Digest32 &out) {
  if (hex.size() != 64) return false;
  auto bytes = from_hex(hex);
  if (!bytes) return false;
  std::copy(bytes->begin(), bytes->end(), out.begin());
  return true;
}

} // namespace blockiot
