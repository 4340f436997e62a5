#include "blockiot/core/validate.hpp"

#include "blockiot/core/units.hpp"

namespace blockiot {

std::vector<std::string> validate_observation(const CanonicalObservation &o) {
  std::vector<std::string> v;
  if (o.kind != kind_of(o.value)) v.push_back("kind/value mismatch");

  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScalarValue>) {
          if (!unit_syntax_ok(x.unit)) v.push_back("scalar unit not a valid UCUM code");
        } else if constexpr (std::is_same_v<T, VectorValue>) {
          if (x.elements.size() < 2) v.push_back("vector length >= 2");
          for (const auto &e : x.elements)
            if (!unit_syntax_ok(e.unit)) {
              v.push_back("vector unit not a valid UCUM code");
              break;
            }
        } else if constexpr (std::is_same_v<T, CodeValue>) {
          if (x.symbol.empty()) v.push_back("code symbol empty");
        } else if constexpr (std::is_same_v<T, EventStateValue>) {
          if (x.state_name.empty()) v.push_back("event state_name empty");
        } else if constexpr (std::is_same_v<T, WaveformValue>) {
          if (!(x.sample_rate_hz > 0.0)) v.push_back("sample_rate_hz > 0");
          if (x.samples.empty()) v.push_back("waveform sample count >= 1");
        } else if constexpr (std::is_same_v<T, StringValue>) {
          // free text, nothing to check
        }
      },
      o.value);

  if (o.device.patient_id.empty()) v.push_back("device patient_id empty");
  if (o.device.device_id.empty()) v.push_back("device device_id empty");
  if (o.code_binding.empty()) v.push_back("code_binding empty");
  return v;
}

} // namespace blockiot
