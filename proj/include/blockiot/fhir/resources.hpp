#pragma once

#include "blockiot/core/json.hpp"
#include "blockiot/core/types.hpp"
#include "blockiot/templates/template.hpp"

namespace blockiot::fhir {

// Resource ids are content-derived so re-exporting the same data is
// idempotent: a bare sha256 hex (64 chars) fits the FHIR id grammar, which
// the full multihash address does not.
std::string observation_resource_id(const CanonicalObservation &obs);
std::string patient_resource_id(const PatientKey &key);
std::string device_resource_id(const DeviceIdentity &identity);

// R4 JSON mapping. Kind determines the value element: scalar has a
// valueQuantity, vector one component per labeled element, code and
// event_state a valueCodeableConcept (the latter with an active-flag
// extension), waveform a valueSampledData, string a valueString.
Json to_fhir_observation(const CanonicalObservation &obs);
Json to_fhir_patient(const PatientIdentity &identity);
Json to_fhir_device(const templates::DeviceTemplate &tpl,
                    const DeviceIdentity &identity);

// Inverse of to_fhir_observation over the emitted subset; throws CodecError
// when the document is not one of ours.
CanonicalObservation observation_from_fhir(const Json &resource);

// Names of required Observation elements that are missing or malformed:
// status, code, subject, effective time, value matching the kind.
std::vector<std::string> observation_structural_errors(const Json &resource);

} // namespace blockiot::fhir
