#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "blockiot/core/hash.hpp"

namespace blockiot::cas {

// Multihash-style address: a 2-byte algorithm tag followed by a SHA-256
// digest, rendered as 68 lowercase hex characters. Tag 0x12 0x20 marks
// sha2-256 with a 32-byte digest. Not wire-compatible with IPFS CIDs.
inline constexpr std::uint8_t kAlgoSha256 = 0x12;
inline constexpr std::uint8_t kDigestLen = 0x20;
inline constexpr std::string_view kAddressPrefix = "1220";

struct ContentAddress {
  Digest32 digest{};

  static ContentAddress of(std::span<const std::uint8_t> content) {
    return ContentAddress{sha256(content)};
  }
  static ContentAddress of(std::string_view content) {
    return ContentAddress{sha256(content)};
  }

  std::string hex() const {
    return std::string(kAddressPrefix) + digest_hex(digest);
  }

  static std::optional<ContentAddress> from_hex(std::string_view s) {
    if (s.size() != 68 || s.substr(0, 4) != kAddressPrefix)
      return std::nullopt;
    ContentAddress a;
    if (!digest_from_hex(s.substr(4), a.digest)) return std::nullopt;
    return a;
  }

  bool operator==(const ContentAddress &) const = default;
  auto operator<=>(const ContentAddress &) const = default;
};

} // namespace blockiot::cas
