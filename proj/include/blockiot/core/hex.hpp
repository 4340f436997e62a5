#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blockiot {

std::string to_hex(std::span<const std::uint8_t> bytes);

// Strict decoder: lowercase hex only, even length. Uppercase input is
// rejected so that re-encoding always reproduces the input byte-for-byte.
std::optional<std::vector<std::uint8_t>> from_hex(std::string_view hex);

} // namespace blockiot
