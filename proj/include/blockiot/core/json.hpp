#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "blockiot/core/types.hpp"

namespace blockiot {

// Malformed wire documents. The codec is strict: wrong types, missing
// fields, or out-of-range values all throw.
struct CodecError : std::runtime_error {
  explicit CodecError(const std::string &what) : std::runtime_error(what) {}
};

using Json = nlohmann::json;

// nlohmann objects keep keys sorted, so dump() with no indentation is the
// canonical byte encoding used for hashing and storage.
std::string canonical_dump(const Json &j);

Json value_to_json(const MeasurementValue &v);
MeasurementValue value_from_json(MeasurementKind kind, const Json &j);

Json device_to_json(const DeviceIdentity &d);
DeviceIdentity device_from_json(const Json &j);

Json identity_to_json(const PatientIdentity &p);
PatientIdentity identity_from_json(const Json &j);

Json observation_to_json(const CanonicalObservation &o);
CanonicalObservation observation_from_json(const Json &j);

// Strict helpers shared by the other modules' codecs.
const Json &require_field(const Json &j, const char *key);
std::string require_string(const Json &j, const char *key);
std::int64_t require_int(const Json &j, const char *key);
double require_number(const Json &j, const char *key);
bool require_bool(const Json &j, const char *key);
TimestampMs require_timestamp(const Json &j, const char *key);
Digest32 require_digest(const Json &j, const char *key);
cas::ContentAddress require_address(const Json &j, const char *key);

} // namespace blockiot
