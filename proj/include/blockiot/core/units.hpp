#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace blockiot {

struct Quantity {
  double magnitude = 0.0;
  std::string unit;

  bool operator==(const Quantity &) const = default;
};

// Converts a (magnitude, UCUM code) pair to the canonical unit of its
// dimension. The table is data: only listed codes are convertible; anything
// else returns nullopt and the caller keeps the original, flagged
// unnormalized. Idempotent on canonical units.
std::optional<Quantity> normalize_unit(double magnitude, std::string_view unit);

bool unit_is_known(std::string_view unit);

// Light syntactic gate: non-empty, printable ASCII, no whitespace. Full UCUM
// grammar parsing is out of scope; the table carries the codes that matter.
bool unit_syntax_ok(std::string_view unit);

} // namespace blockiot
