#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace blockiot::cas {

using Seed = std::array<std::uint8_t, 32>;
using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 64>;
using Signature = std::array<std::uint8_t, 64>;

// Ed25519 signing keys. Signatures are deterministic for a fixed
// (key, message) pair, which the replay and transport-equivalence
// guarantees rely on.
struct KeyPair {
  Seed seed{};
  PublicKey public_key{};
  SecretKey secret_key{};

  static KeyPair from_seed(const Seed &seed);
  static KeyPair generate();
};

Signature sign(const SecretKey &sk, std::string_view message);
bool verify(const PublicKey &pk, std::string_view message,
            const Signature &sig);

} // namespace blockiot::cas
