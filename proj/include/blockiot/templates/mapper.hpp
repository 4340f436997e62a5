#pragma once

#include "blockiot/core/json.hpp"
#include "blockiot/templates/template.hpp"

namespace blockiot::templates {

// Payload is missing or has empty identifier keys.
struct IdentityError : std::runtime_error {
  explicit IdentityError(const std::string &w) : std::runtime_error(w) {}
};

// A single value cannot be represented under the rule's declared kind.
struct MappingError : std::runtime_error {
  explicit MappingError(const std::string &w) : std::runtime_error(w) {}
};

struct FieldError {
  std::string key; // the payload key the error consumed
  std::string message;
  bool operator==(const FieldError &) const = default;
};

// Every non-identifier payload key lands in exactly one bucket; nothing is
// silently dropped.
struct MapResult {
  std::vector<CanonicalObservation> observations;
  std::vector<std::string> consumed_keys; // keys represented in observations
  std::vector<std::string> unmatched_keys;
  std::vector<FieldError> field_errors;
};

std::pair<std::string, std::string> extract_identity(const DeviceTemplate &t,
                                                     const Json &raw);

MeasurementValue classify_value(const ParameterRule &rule, const Json &raw_value);

MapResult map_payload(const DeviceTemplate &t, const Json &raw,
                      TimestampMs received_at, const PatientKey &subject);

} // namespace blockiot::templates
