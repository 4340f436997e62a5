#include "blockiot/core/json.hpp"

namespace blockiot {

std::string canonical_dump(const Json &j) { return j.dump(); }

const Json &require_field(const Json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end())
    throw CodecError(std::string("missing field: ") + key);
  return *it;
}

std::string require_string(const Json &j, const char *key) {
  const Json &f = require_field(j, key);
  if (!f.is_string())
    throw CodecError(std::string("field not a string: ") + key);
  return f.get<std::string>();
}

std::int64_t require_int(const Json &j, const char *key) {
  const Json &f = require_field(j, key);
  if (!f.is_number_integer())
    throw CodecError(std::string("field not an integer: ") + key);
  return f.get<std::int64_t>();
}

double require_number(const Json &j, const char *key) {
  const Json &f = require_field(j, key);
  if (!f.is_number())
    throw CodecError(std::string("field not a number: ") + key);
  return f.get<double>();
}

bool require_bool(const Json &j, const char *key) {
  const Json &f = require_field(j, key);
  if (!f.is_boolean())
    throw CodecError(std::string("field not a boolean: ") + key);
  return f.get<bool>();
}

TimestampMs require_timestamp(const Json &j, const char *key) {
  auto t = parse_timestamp(require_string(j, key));
  if (!t) throw CodecError(std::string("bad timestamp in field: ") + key);
  return *t;
}

Digest32 require_digest(const Json &j, const char *key) {
  Digest32 d;
  if (!digest_from_hex(require_string(j, key), d))
    throw CodecError(std::string("bad digest in field: ") + key);
  return d;
}

cas::ContentAddress require_address(const Json &j, const char *key) {
  auto a = cas::ContentAddress::from_hex(require_string(j, key));
  if (!a) throw CodecError(std::string("bad content address in field: ") + key);
  return *a;
}

Json value_to_json(const MeasurementValue &v) {
  Json j;
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScalarValue>) {
          j["magnitude"] = x.magnitude;
          j["unit"] = x.unit;
        } else if constexpr (std::is_same_v<T, VectorValue>) {
          Json elems = Json::array();
          for (const auto &e : x.elements) {
            elems.push_back(Json{{"label", e.label},
                                 {"magnitude", e.magnitude},
                                 {"unit", e.unit}});
          }
          j["elements"] = std::move(elems);
        } else if constexpr (std::is_same_v<T, CodeValue>) {
          j["symbol"] = x.symbol;
        } else if constexpr (std::is_same_v<T, EventStateValue>) {
          j["state_name"] = x.state_name;
          j["active"] = x.active;
        } else if constexpr (std::is_same_v<T, WaveformValue>) {
          j["sample_rate_hz"] = x.sample_rate_hz;
          j["channel_labels"] = x.channel_labels;
          j["samples"] = x.samples;
        } else if constexpr (std::is_same_v<T, StringValue>) {
          j["text"] = x.text;
        }
      },
      v);
  return j;
}

MeasurementValue value_from_json(MeasurementKind kind, const Json &j) {
  if (!j.is_object()) throw CodecError("value not an object");
  switch (kind) {
    case MeasurementKind::Scalar:
      return ScalarValue{require_number(j, "magnitude"),
                         require_string(j, "unit")};
    case MeasurementKind::Vector: {
      const Json &elems = require_field(j, "elements");
      if (!elems.is_array()) throw CodecError("vector elements not an array");
      VectorValue v;
      for (const Json &e : elems) {
        v.elements.push_back(VectorElement{require_string(e, "label"),
                                           require_number(e, "magnitude"),
                                           require_string(e, "unit")});
      }
      return v;
    }
    case MeasurementKind::Code:
      return CodeValue{require_string(j, "symbol")};
    case MeasurementKind::EventState:
      return EventStateValue{require_string(j, "state_name"),
                             require_bool(j, "active")};
    case MeasurementKind::Waveform: {
      WaveformValue w;
      w.sample_rate_hz = require_number(j, "sample_rate_hz");
      const Json &labels = require_field(j, "channel_labels");
      const Json &samples = require_field(j, "samples");
      if (!labels.is_array() || !samples.is_array())
        throw CodecError("waveform labels/samples not arrays");
      for (const Json &l : labels) {
        if (!l.is_string()) throw CodecError("waveform label not a string");
        w.channel_labels.push_back(l.get<std::string>());
      }
      for (const Json &s : samples) {
        if (!s.is_number()) throw CodecError("waveform sample not a number");
        w.samples.push_back(s.get<double>());
      }
      return w;
    }
    case MeasurementKind::String:
      return StringValue{require_string(j, "text")};
  }
  throw CodecError("unknown measurement kind");
}

Json device_to_json(const DeviceIdentity &d) {
  return Json{{"patient_id", d.patient_id},
              {"device_id", d.device_id},
              {"nomenclature_code", d.nomenclature_code}};
}

DeviceIdentity device_from_json(const Json &j) {
  return DeviceIdentity{require_string(j, "patient_id"),
                        require_string(j, "device_id"),
                        require_int(j, "nomenclature_code")};
}

Json identity_to_json(const PatientIdentity &p) {
  return Json{{"first_name", p.first_name},
              {"last_name", p.last_name},
              {"date_of_birth", format_date(p.date_of_birth)},
              {"patient_key", digest_hex(p.patient_key)}};
}

PatientIdentity identity_from_json(const Json &j) {
  PatientIdentity p;
  p.first_name = require_string(j, "first_name");
  p.last_name = require_string(j, "last_name");
  auto d = parse_date(require_string(j, "date_of_birth"));
  if (!d) throw CodecError("bad date_of_birth");
  p.date_of_birth = *d;
  p.patient_key = require_digest(j, "patient_key");
  return p;
}

Json observation_to_json(const CanonicalObservation &o) {
  return Json{{"subject", digest_hex(o.subject)},
              {"device", device_to_json(o.device)},
              {"effective_time", format_timestamp(o.effective_time)},
              {"kind", std::string(kind_name(o.kind))},
              {"value", value_to_json(o.value)},
              {"code_binding", o.code_binding},
              {"provenance", o.provenance.hex()}};
}

CanonicalObservation observation_from_json(const Json &j) {
  CanonicalObservation o;
  o.subject = require_digest(j, "subject");
  o.device = device_from_json(require_field(j, "device"));
  o.effective_time = require_timestamp(j, "effective_time");
  auto k = kind_from_name(require_string(j, "kind"));
  if (!k) throw CodecError("unknown kind");
  o.kind = *k;
  o.value = value_from_json(o.kind, require_field(j, "value"));
  o.code_binding = require_string(j, "code_binding");
  o.provenance = require_address(j, "provenance");
  return o;
}

} // namespace blockiot
