#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace blockiot {

using Digest32 = std::array<std::uint8_t, 32>;

Digest32 sha256(std::span<const std::uint8_t> data);
Digest32 sha256(std::string_view data);

std::string digest_hex(const Digest32 &d);

// Strict parse of a 64-char lowercase hex digest.
bool digest_from_hex(std::string_view hex, Digest32 &out);

} // namespace blockiot
