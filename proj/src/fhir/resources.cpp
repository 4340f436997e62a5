#include "blockiot/fhir/resources.hpp"

#include <charconv>

#include "blockiot/core/hash.hpp"
#include "blockiot/core/units.hpp"

namespace blockiot::fhir {

namespace {

constexpr std::string_view kUcum = "http://unitsofmeasure.org";
constexpr std::string_view kActiveExt = "urn:blockiot:event-active";
constexpr std::string_view kRateExt = "urn:blockiot:sample-rate-hz";
constexpr std::string_view kLabelExt = "urn:blockiot:channel-label";
constexpr std::string_view kDeviceIdSystem = "urn:blockiot:device";
constexpr std::string_view kCasPrefix = "urn:blockiot:cas:";

Json quantity(double value, const std::string &unit,
              std::vector<std::string> &unnormalized) {
  Json q{{"value", value}, {"unit", unit}};
  if (unit_is_known(unit)) {
    q["system"] = kUcum;
    q["code"] = unit;
  } else {
    unnormalized.push_back(unit);
  }
  return q;
}

Json concept_of(const std::string &symbol) {
  return Json{{"coding", Json::array({Json{{"code", symbol}}})},
              {"text", symbol}};
}

// Shortest round-trip decimal; "2.0" style for integral doubles.
std::string decimal(double v) { return Json(v).dump(); }

double parse_decimal(std::string_view token) {
  Json j = Json::parse(token, nullptr, false);
  if (!j.is_number()) throw CodecError("fhir: bad decimal in sampled data");
  return j.get<double>();
}

std::string reference_id(const Json &parent, const char *field,
                         std::string_view prefix) {
  const Json &ref = require_field(parent, field);
  std::string r = require_string(ref, "reference");
  if (r.rfind(prefix, 0) != 0)
    throw CodecError(std::string("fhir: reference is not ") +
                     std::string(prefix));
  return r.substr(prefix.size());
}

} // namespace

std::string observation_resource_id(const CanonicalObservation &obs) {
  return digest_hex(sha256(canonical_dump(observation_to_json(obs))));
}

std::string patient_resource_id(const PatientKey &key) {
  return digest_hex(key);
}

std::string device_resource_id(const DeviceIdentity &identity) {
  Json j{{"device_id", identity.device_id},
         {"nomenclature_code", identity.nomenclature_code},
         {"patient_id", identity.patient_id}};
  return digest_hex(sha256(canonical_dump(j)));
}

Json to_fhir_observation(const CanonicalObservation &obs) {
  Json r{{"resourceType", "Observation"},
         {"id", observation_resource_id(obs)},
         {"meta", {{"source", std::string(kCasPrefix) + obs.provenance.hex()}}},
         {"status", "final"},
         {"code", concept_of(obs.code_binding)},
         {"subject",
          {{"reference", "Patient/" + patient_resource_id(obs.subject)}}},
         {"effectiveDateTime", format_timestamp(obs.effective_time)},
         {"device",
          {{"reference", "Device/" + device_resource_id(obs.device)},
           {"identifier",
            {{"system", kDeviceIdSystem},
             {"value", obs.device.patient_id + "/" + obs.device.device_id +
                           "/" +
                           std::to_string(obs.device.nomenclature_code)}}}}}};

  std::vector<std::string> unnormalized;
  switch (obs.kind) {
    case MeasurementKind::Scalar: {
      const auto &v = std::get<ScalarValue>(obs.value);
      r["valueQuantity"] = quantity(v.magnitude, v.unit, unnormalized);
      break;
    }
    case MeasurementKind::Vector: {
      const auto &v = std::get<VectorValue>(obs.value);
      Json components = Json::array();
      for (const auto &e : v.elements)
        components.push_back(
            Json{{"code", Json{{"text", e.label}}},
                 {"valueQuantity", quantity(e.magnitude, e.unit,
                                            unnormalized)}});
      r["component"] = std::move(components);
      break;
    }
    case MeasurementKind::Code: {
      const auto &v = std::get<CodeValue>(obs.value);
      r["valueCodeableConcept"] = concept_of(v.symbol);
      break;
    }
    case MeasurementKind::EventState: {
      const auto &v = std::get<EventStateValue>(obs.value);
      Json state = concept_of(v.state_name);
      state["extension"] = Json::array(
          {Json{{"url", kActiveExt}, {"valueBoolean", v.active}}});
      r["valueCodeableConcept"] = std::move(state);
      break;
    }
    case MeasurementKind::Waveform: {
      const auto &v = std::get<WaveformValue>(obs.value);
      std::string data;
      for (double s : v.samples) {
        if (!data.empty()) data += ' ';
        data += decimal(s);
      }
      Json ext = Json::array(
          {Json{{"url", kRateExt}, {"valueDecimal", v.sample_rate_hz}}});
      for (const auto &label : v.channel_labels)
        ext.push_back(Json{{"url", kLabelExt}, {"valueString", label}});
      r["valueSampledData"] =
          Json{{"origin", {{"value", 0}}},
               {"period", 1000.0 / v.sample_rate_hz},
               {"dimensions",
                v.channel_labels.empty() ? 1 : v.channel_labels.size()},
               {"data", std::move(data)},
               {"extension", std::move(ext)}};
      break;
    }
    case MeasurementKind::String: {
      r["valueString"] = std::get<StringValue>(obs.value).text;
      break;
    }
  }

  if (!unnormalized.empty()) {
    Json notes = Json::array();
    for (const auto &unit : unnormalized)
      notes.push_back(Json{{"text", "unit not normalized: " + unit}});
    r["note"] = std::move(notes);
  }
  return r;
}

Json to_fhir_patient(const PatientIdentity &identity) {
  return Json{
      {"resourceType", "Patient"},
      {"id", patient_resource_id(identity.patient_key)},
      {"identifier",
       Json::array({Json{{"system", "urn:blockiot:patient-key"},
                         {"value", digest_hex(identity.patient_key)}}})},
      {"name",
       Json::array({Json{{"family", identity.last_name},
                         {"given", Json::array({identity.first_name})}}})},
      {"birthDate", format_date(identity.date_of_birth)}};
}

Json to_fhir_device(const templates::DeviceTemplate &tpl,
                    const DeviceIdentity &identity) {
  const auto &cfg = tpl.device_config;
  Json r{{"resourceType", "Device"},
         {"id", device_resource_id(identity)},
         {"identifier",
          Json::array({Json{{"system", "urn:blockiot:device-id"},
                            {"value", identity.device_id}},
                       Json{{"system", "urn:blockiot:device-serial"},
                            {"value", cfg.serial_number}}})},
         {"manufacturer", cfg.manufacturer},
         {"modelNumber", cfg.model},
         {"serialNumber", cfg.serial_number},
         {"type",
          {{"coding",
            Json::array({Json{{"system", "urn:blockiot:nomenclature"},
                              {"code",
                               std::to_string(identity.nomenclature_code)}}})},
           {"text", cfg.specialization}}}};
  Json versions = Json::array();
  for (auto [label, value] :
       {std::pair{"firmware", &cfg.firmware}, {"hardware", &cfg.hardware},
        {"software", &cfg.software}}) {
    if (!value->empty())
      versions.push_back(
          Json{{"type", Json{{"text", label}}}, {"value", *value}});
  }
  if (!versions.empty()) r["version"] = std::move(versions);
  if (!cfg.regulatory.empty())
    r["property"] = Json::array(
        {Json{{"type", Json{{"text", "regulatory"}}},
              {"valueCode", Json::array({Json{{"text", cfg.regulatory}}})}}});
  return r;
}

CanonicalObservation observation_from_fhir(const Json &resource) {
  if (!resource.is_object() ||
      resource.value("resourceType", "") != "Observation")
    throw CodecError("fhir: not an Observation");

  CanonicalObservation obs;

  std::string subject = reference_id(resource, "subject", "Patient/");
  if (!digest_from_hex(subject, obs.subject))
    throw CodecError("fhir: subject reference is not a patient key");

  const Json &meta = require_field(resource, "meta");
  std::string source = require_string(meta, "source");
  if (source.rfind(kCasPrefix, 0) != 0)
    throw CodecError("fhir: meta.source is not a store address");
  auto provenance =
      cas::ContentAddress::from_hex(source.substr(kCasPrefix.size()));
  if (!provenance) throw CodecError("fhir: bad provenance address");
  obs.provenance = *provenance;

  obs.effective_time = require_timestamp(resource, "effectiveDateTime");

  const Json &code = require_field(resource, "code");
  obs.code_binding = require_string(code, "text");

  const Json &device = require_field(resource, "device");
  const Json &identifier = require_field(device, "identifier");
  if (require_string(identifier, "system") != kDeviceIdSystem)
    throw CodecError("fhir: unknown device identifier system");
  std::string packed = require_string(identifier, "value");
  auto first = packed.find('/');
  auto last = packed.rfind('/');
  if (first == std::string::npos || last == first)
    throw CodecError("fhir: device identifier needs patient/device/code");
  obs.device.patient_id = packed.substr(0, first);
  obs.device.device_id = packed.substr(first + 1, last - first - 1);
  std::string_view code_text = std::string_view(packed).substr(last + 1);
  auto [end, ec] =
      std::from_chars(code_text.data(), code_text.data() + code_text.size(),
                      obs.device.nomenclature_code);
  if (ec != std::errc() || end != code_text.data() + code_text.size())
    throw CodecError("fhir: bad nomenclature code");

  if (auto it = resource.find("valueQuantity"); it != resource.end()) {
    obs.kind = MeasurementKind::Scalar;
    obs.value = ScalarValue{require_number(*it, "value"),
                            require_string(*it, "unit")};
  } else if (auto comp = resource.find("component");
             comp != resource.end()) {
    obs.kind = MeasurementKind::Vector;
    if (!comp->is_array()) throw CodecError("fhir: component not an array");
    VectorValue v;
    for (const Json &c : *comp) {
      const Json &label = require_field(c, "code");
      const Json &q = require_field(c, "valueQuantity");
      v.elements.push_back({require_string(label, "text"),
                            require_number(q, "value"),
                            require_string(q, "unit")});
    }
    obs.value = std::move(v);
  } else if (auto cc = resource.find("valueCodeableConcept");
             cc != resource.end()) {
    std::string text = require_string(*cc, "text");
    const Json *active = nullptr;
    if (auto ext = cc->find("extension"); ext != cc->end()) {
      for (const Json &e : *ext)
        if (e.value("url", "") == kActiveExt) active = &e;
    }
    if (active) {
      obs.kind = MeasurementKind::EventState;
      obs.value = EventStateValue{text, require_bool(*active, "valueBoolean")};
    } else {
      obs.kind = MeasurementKind::Code;
      obs.value = CodeValue{text};
    }
  } else if (auto sd = resource.find("valueSampledData");
             sd != resource.end()) {
    obs.kind = MeasurementKind::Waveform;
    WaveformValue v;
    const Json &ext = require_field(*sd, "extension");
    for (const Json &e : ext) {
      std::string url = e.value("url", "");
      if (url == kRateExt)
        v.sample_rate_hz = require_number(e, "valueDecimal");
      else if (url == kLabelExt)
        v.channel_labels.push_back(require_string(e, "valueString"));
    }
    if (v.sample_rate_hz <= 0)
      throw CodecError("fhir: sampled data without a sample rate");
    std::string data = require_string(*sd, "data");
    std::size_t pos = 0;
    while (pos < data.size()) {
      std::size_t space = data.find(' ', pos);
      if (space == std::string::npos) space = data.size();
      v.samples.push_back(parse_decimal(
          std::string_view(data).substr(pos, space - pos)));
      pos = space + 1;
    }
    obs.value = std::move(v);
  } else if (auto vs = resource.find("valueString"); vs != resource.end()) {
    if (!vs->is_string()) throw CodecError("fhir: valueString not a string");
    obs.kind = MeasurementKind::String;
    obs.value = StringValue{vs->get<std::string>()};
  } else {
    throw CodecError("fhir: no value element");
  }

  return obs;
}

std::vector<std::string> observation_structural_errors(const Json &resource) {
  std::vector<std::string> missing;
  if (!resource.is_object()) return {"resource"};
  auto has_string = [&](const char *field) {
    auto it = resource.find(field);
    return it != resource.end() && it->is_string() &&
           !it->get<std::string>().empty();
  };
  if (!has_string("status")) missing.push_back("status");
  auto code = resource.find("code");
  if (code == resource.end() || !code->is_object() || !code->contains("text"))
    missing.push_back("code");
  auto subject = resource.find("subject");
  if (subject == resource.end() || !subject->is_object() ||
      !subject->contains("reference"))
    missing.push_back("subject");
  if (!has_string("effectiveDateTime")) {
    missing.push_back("effectiveDateTime");
  } else {
    try {
      require_timestamp(resource, "effectiveDateTime");
    } catch (const CodecError &) {
      missing.push_back("effectiveDateTime");
    }
  }
  int values = 0;
  for (const char *field : {"valueQuantity", "component",
                            "valueCodeableConcept", "valueSampledData",
                            "valueString"})
    if (resource.contains(field)) ++values;
  if (values != 1) missing.push_back("value");
  return missing;
}

} // namespace blockiot::fhir
