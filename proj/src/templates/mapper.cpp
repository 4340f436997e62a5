#include "blockiot/templates/mapper.hpp"

#include <algorithm>
#include <cmath>

#include "blockiot/core/units.hpp"

namespace blockiot::templates {

namespace {

double numeric(const Json &v, const char *what) {
  if (!v.is_number())
    throw MappingError(std::string(what) + ": expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d))
    throw MappingError(std::string(what) + ": not finite");
  return d;
}

ScalarValue to_scalar(const ParameterRule &rule, const Json &v) {
  double mag = numeric(v, "scalar value");
  auto q = normalize_unit(mag, *rule.unit);
  if (!q)
    throw MappingError("unit \"" + *rule.unit + "\" cannot be normalized");
  return ScalarValue{q->magnitude, q->unit};
}

VectorValue to_vector(const ParameterRule &rule, const Json &v) {
  if (!v.is_array())
    throw MappingError("vector value: expected an array");
  if (v.size() != rule.vector_layout.size())
    throw MappingError("vector value: expected " +
                       std::to_string(rule.vector_layout.size()) +
                       " elements, got " + std::to_string(v.size()));
  VectorValue out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double mag = numeric(v[i], "vector element");
    auto q = normalize_unit(mag, *rule.unit);
    if (!q)
      throw MappingError("unit \"" + *rule.unit + "\" cannot be normalized");
    out.elements.push_back(
        VectorElement{rule.vector_layout[i], q->magnitude, q->unit});
  }
  return out;
}

CodeValue to_code(const ParameterRule &rule, const Json &v) {
  if (!v.is_string())
    throw MappingError("code value: expected a string");
  auto s = v.get<std::string>();
  if (std::find(rule.code_set.begin(), rule.code_set.end(), s) ==
      rule.code_set.end())
    throw MappingError("symbol \"" + s + "\" not in the declared code set");
  return CodeValue{std::move(s)};
}

EventStateValue to_event(const ParameterRule &rule, const Json &v) {
  // Devices report events three ways: a bare state name (implicitly
  // active), a boolean under a state-named key, or the explicit pair.
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.empty()) throw MappingError("event value: empty state name");
    return EventStateValue{std::move(s), true};
  }
  if (v.is_boolean())
    return EventStateValue{rule.target_code, v.get<bool>()};
  if (v.is_object()) {
    auto state = v.find("state_name");
    auto active = v.find("active");
    if (state == v.end() || !state->is_string() || active == v.end() ||
        !active->is_boolean())
      throw MappingError("event value: expected {state_name, active}");
    return EventStateValue{state->get<std::string>(), active->get<bool>()};
  }
  throw MappingError("event value: expected a string, boolean, or object");
}

WaveformValue to_waveform(const Json &v) {
  if (!v.is_object())
    throw MappingError("waveform value: expected an object");
  WaveformValue w;
  auto rate = v.find("sample_rate_hz");
  if (rate == v.end() || !rate->is_number())
    throw MappingError("waveform value: sample_rate_hz required");
  w.sample_rate_hz = rate->get<double>();
  if (!(w.sample_rate_hz > 0))
    throw MappingError("waveform value: sample_rate_hz must be positive");
  auto samples = v.find("samples");
  if (samples == v.end() || !samples->is_array() || samples->empty())
    throw MappingError("waveform value: samples must be a non-empty array");
  for (const auto &s : *samples)
    w.samples.push_back(numeric(s, "waveform sample"));
  if (auto labels = v.find("channel_labels"); labels != v.end()) {
    if (!labels->is_array())
      throw MappingError("waveform value: channel_labels must be an array");
    for (const auto &l : *labels) {
      if (!l.is_string())
        throw MappingError("waveform value: channel label not a string");
      w.channel_labels.push_back(l.get<std::string>());
    }
  }
  return w;
}

StringValue to_string_value(const Json &v) {
  if (!v.is_string())
    throw MappingError("string value: expected a string");
  return StringValue{v.get<std::string>()};
}

// Device-supplied timestamps arrive as ISO strings or epoch milliseconds.
std::optional<TimestampMs> parse_device_time(const Json &v) {
  if (v.is_string()) return parse_timestamp(v.get<std::string>());
  if (v.is_number_integer()) return v.get<std::int64_t>();
  return std::nullopt;
}

} // namespace

std::pair<std::string, std::string> extract_identity(const DeviceTemplate &t,
                                                     const Json &raw) {
  if (!raw.is_object())
    throw IdentityError("payload is not a key-value document");
  auto read = [&](const std::string &key, const char *what) {
    auto it = raw.find(key);
    if (it == raw.end() || !it->is_string() || it->get<std::string>().empty())
      throw IdentityError(std::string(what) + " key \"" + key +
                          "\" missing or empty");
    return it->get<std::string>();
  };
  return {read(t.identifiers.patient_id_key, "patient id"),
          read(t.identifiers.device_id_key, "device id")};
}

MeasurementValue classify_value(const ParameterRule &rule, const Json &v) {
  switch (rule.kind) {
    case MeasurementKind::Scalar: return to_scalar(rule, v);
    case MeasurementKind::Vector: return to_vector(rule, v);
    case MeasurementKind::Code: return to_code(rule, v);
    case MeasurementKind::EventState: return to_event(rule, v);
    case MeasurementKind::Waveform: return to_waveform(v);
    case MeasurementKind::String: return to_string_value(v);
  }
  throw MappingError("rule has no valid kind");
}

MapResult map_payload(const DeviceTemplate &t, const Json &raw,
                      TimestampMs received_at, const PatientKey &subject) {
  auto [patient_id, device_id] = extract_identity(t, raw);

  DeviceIdentity device{patient_id, device_id,
                        t.identifiers.nomenclature_code};
  cas::ContentAddress provenance = cas::ContentAddress::of(canonical_dump(raw));

  MapResult result;

  // Effective time: a synced device clock is authoritative, an unsynced
  // one is honored only within its declared accuracy of the arrival time.
  TimestampMs effective = received_at;
  if (t.timestamp_key) {
    if (auto it = raw.find(*t.timestamp_key); it != raw.end()) {
      auto device_time = parse_device_time(*it);
      if (!device_time) {
        result.field_errors.push_back(
            {*t.timestamp_key, "unparseable device timestamp"});
      } else if (t.device_config.time_properties.synchronization == "synced" ||
                 std::llabs(*device_time - received_at) <=
                     t.device_config.time_properties.accuracy_ms) {
        effective = *device_time;
      }
    }
  }

  auto emit = [&](const ParameterRule &rule, MeasurementValue value) {
    CanonicalObservation o;
    o.subject = subject;
    o.device = device;
    o.effective_time = effective;
    o.kind = rule.kind;
    o.value = std::move(value);
    o.code_binding = rule.target_code;
    o.provenance = provenance;
    result.observations.push_back(std::move(o));
  };

  // Rules drive the iteration so observation order follows the template,
  // not the payload's key order.
  for (const auto &rule : t.parameter_map) {
    if (!rule.component_keys.empty()) {
      // Gather rule: several flat payload keys form one vector reading.
      std::vector<std::string> present, missing;
      for (const auto &ck : rule.component_keys) {
        (raw.contains(ck) ? present : missing).push_back(ck);
      }
      if (present.empty()) continue; // rule simply not in this payload
      if (!missing.empty()) {
        std::string which;
        for (const auto &m : missing) which += (which.empty() ? "" : ", ") + m;
        for (const auto &p : present)
          result.field_errors.push_back(
              {p, "vector \"" + rule.target_code +
                      "\" incomplete, missing: " + which});
        continue;
      }
      VectorValue vec;
      std::string bad;
      for (std::size_t i = 0; i < rule.component_keys.size(); ++i) {
        try {
          double mag = numeric(raw.at(rule.component_keys[i]), "vector element");
          auto q = normalize_unit(mag, *rule.unit);
          if (!q) throw MappingError("unit cannot be normalized");
          vec.elements.push_back(
              VectorElement{rule.vector_layout[i], q->magnitude, q->unit});
        } catch (const MappingError &e) {
          bad = e.what();
          break;
        }
      }
      if (!bad.empty()) {
        for (const auto &p : present)
          result.field_errors.push_back({p, bad});
        continue;
      }
      emit(rule, std::move(vec));
      for (const auto &p : present) result.consumed_keys.push_back(p);
      continue;
    }

    auto it = raw.find(rule.source_key);
    if (it == raw.end()) continue;
    try {
      emit(rule, classify_value(rule, *it));
      result.consumed_keys.push_back(rule.source_key);
    } catch (const MappingError &e) {
      result.field_errors.push_back({rule.source_key, e.what()});
    }
  }

  // Whatever no rule claimed is reported, not dropped.
  for (auto it = raw.begin(); it != raw.end(); ++it) {
    const std::string &key = it.key();
    if (key == t.identifiers.patient_id_key ||
        key == t.identifiers.device_id_key)
      continue;
    if (t.timestamp_key && key == *t.timestamp_key) continue;
    bool seen =
        std::find(result.consumed_keys.begin(), result.consumed_keys.end(),
                  key) != result.consumed_keys.end() ||
        std::any_of(result.field_errors.begin(), result.field_errors.end(),
                    [&](const FieldError &f) { return f.key == key; });
    if (!seen) result.unmatched_keys.push_back(key);
  }

  return result;
}

} // namespace blockiot::templates
