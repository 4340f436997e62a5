#include "blockiot/core/units.hpp"

#include <map>

namespace blockiot {

namespace {

struct Conversion {
  const char *canonical;
  double scale;
  double offset; // canonical = magnitude * scale + offset
};

// One row per accepted UCUM code, grouped by dimension. Canonical units map
// to themselves so normalization is idempotent.
const std::map<std::string, Conversion, std::less<>> &table() {
  static const std::map<std::string, Conversion, std::less<>> t = {
      // mass -> kg
      {"kg", {"kg", 1.0, 0.0}},
      {"g", {"kg", 0.001, 0.0}},
      {"[lb_av]", {"kg", 0.45359237, 0.0}},
      // length -> m
      {"m", {"m", 1.0, 0.0}},
      {"km", {"m", 1000.0, 0.0}},
      {"cm", {"m", 0.01, 0.0}},
      {"[in_i]", {"m", 0.0254, 0.0}},
      // temperature -> Cel
      {"Cel", {"Cel", 1.0, 0.0}},
      {"[degF]", {"Cel", 5.0 / 9.0, -160.0 / 9.0}},
      {"K", {"Cel", 1.0, -273.15}},
      // pressure -> mm[Hg]  (1 mm[Hg] = 133.322387415 Pa)
      {"mm[Hg]", {"mm[Hg]", 1.0, 0.0}},
      {"kPa", {"mm[Hg]", 1000.0 / 133.322387415, 0.0}},
      {"Pa", {"mm[Hg]", 1.0 / 133.322387415, 0.0}},
      // mass concentration (glucose) -> mg/dL
      {"mg/dL", {"mg/dL", 1.0, 0.0}},
      {"g/L", {"mg/dL", 100.0, 0.0}},
      // rate -> /min
      {"/min", {"/min", 1.0, 0.0}},
      {"/s", {"/min", 60.0, 0.0}},
      {"/h", {"/min", 1.0 / 60.0, 0.0}},
      // volume -> L
      {"L", {"L", 1.0, 0.0}},
      {"mL", {"L", 0.001, 0.0}},
      // flow -> L/s
      {"L/s", {"L/s", 1.0, 0.0}},
      {"L/min", {"L/s", 1.0 / 60.0, 0.0}},
      // duration -> s
      {"s", {"s", 1.0, 0.0}},
      {"min", {"s", 60.0, 0.0}},
      {"ms", {"s", 0.001, 0.0}},
      // dimensionless, identity
      {"1", {"1", 1.0, 0.0}},
      {"%", {"%", 1.0, 0.0}},
      {"[iU]", {"[iU]", 1.0, 0.0}},
      {"{steps}", {"{steps}", 1.0, 0.0}},
      {"{beats}", {"{beats}", 1.0, 0.0}},
      {"{doses}", {"{doses}", 1.0, 0.0}},
  };
  return t;
}

} // namespace

std::optional<Quantity> normalize_unit(double magnitude,
                                       std::string_view unit) {
  const auto &t = table();
  auto it = t.find(unit);
  if (it == t.end()) return std::nullopt;
  const Conversion &c = it->second;
  return Quantity{magnitude * c.scale + c.offset, c.canonical};
}

bool unit_is_known(std::string_view unit) {
  return table().find(unit) != table().end();
}

bool unit_syntax_ok(std::string_view unit) {
  if (unit.empty()) return false;
  for (char ch : unit) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (c <= 0x20 || c >= 0x7f) return false;
  }
  return true;
}

} // namespace blockiot
