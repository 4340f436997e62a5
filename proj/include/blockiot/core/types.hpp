#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "blockiot/cas/address.hpp"
#include "blockiot/core/hash.hpp"
#include "blockiot/core/time.hpp"

namespace blockiot {

// 32-byte biometric digest identifying a patient everywhere in the system.
using PatientKey = Digest32;

struct PatientIdentity {
  std::string first_name;
  std::string last_name;
  CivilDate date_of_birth;
  PatientKey patient_key{};

  bool operator==(const PatientIdentity &) const = default;
};

struct DeviceIdentity {
  std::string patient_id; // manufacturer-assigned
  std::string device_id;  // manufacturer-assigned
  std::int64_t nomenclature_code = 0;

  bool operator==(const DeviceIdentity &) const = default;
};

enum class MeasurementKind : std::uint8_t {
  Scalar,
  Vector,
  Code,
  EventState,
  Waveform,
  String,
};

std::string_view kind_name(MeasurementKind k);
std::optional<MeasurementKind> kind_from_name(std::string_view s);

struct ScalarValue {
  double magnitude = 0.0;
  std::string unit; // UCUM code

  bool operator==(const ScalarValue &) const = default;
};

struct VectorElement {
  std::string label;
  double magnitude = 0.0;
  std::string unit;

  bool operator==(const VectorElement &) const = default;
};

struct VectorValue {
  std::vector<VectorElement> elements; // length >= 2

  bool operator==(const VectorValue &) const = default;
};

struct CodeValue {
  std::string symbol;

  bool operator==(const CodeValue &) const = default;
};

struct EventStateValue {
  std::string state_name;
  bool active = false;

  bool operator==(const EventStateValue &) const = default;
};

struct WaveformValue {
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_labels;
  std::vector<double> samples;

  bool operator==(const WaveformValue &) const = default;
};

struct StringValue {
  std::string text;

  bool operator==(const StringValue &) const = default;
};

using MeasurementValue = std::variant<ScalarValue, VectorValue, CodeValue,
                                      EventStateValue, WaveformValue,
                                      StringValue>;

MeasurementKind kind_of(const MeasurementValue &v);

struct CanonicalObservation {
  PatientKey subject{};
  DeviceIdentity device;
  TimestampMs effective_time = 0;
  MeasurementKind kind = MeasurementKind::Scalar;
  MeasurementValue value;
  std::string code_binding;
  cas::ContentAddress provenance; // address of the raw payload

  bool operator==(const CanonicalObservation &) const = default;
};

// Canonical biometric string: lowercase, trimmed, "first|last|YYYY-MM-DD".
// Non-ASCII bytes pass through unchanged and are assumed NFC-normalized.
struct PatientKeyError {
  std::string message;
};

std::string canonical_biometric_string(std::string_view first,
                                       std::string_view last,
                                       const CivilDate &dob);

// Throws std::invalid_argument on empty names or invalid/future dates.
PatientKey patient_key(std::string_view first, std::string_view last,
                       const CivilDate &dob);

PatientIdentity make_patient_identity(std::string first, std::string last,
                                      const CivilDate &dob);

} // namespace blockiot
