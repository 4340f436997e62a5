#pragma once

#include "blockiot/cas/address.hpp"
#include "blockiot/contracts/spec.hpp"

namespace blockiot::contracts {

enum class Severity { Notify, Alert, Emergency };

std::string_view severity_name(Severity s);
std::optional<Severity> severity_from_name(std::string_view s);

// emitted_at is the latest triggering observation time, never the wall
// clock, so replaying the chain reproduces the event bit-for-bit.
struct AlertEvent {
  Severity severity = Severity::Notify;
  PatientKey patient_key{};
  ContractKind contract_kind = ContractKind::AdverseCondition;
  std::vector<cas::ContentAddress> triggering; // sorted, distinct, non-empty
  std::string message;
  TimestampMs emitted_at = 0;
  std::vector<std::string> contacts; // escalation list, emergency only

  // Replay-safe identity: same contract firing on the same evidence is
  // the same alert.
  std::string dedup_key() const;
  Json to_json() const;
};

AlertEvent alert_event_from_json(const Json &j);

struct DoseOutcome {
  TimestampMs scheduled_at = 0;
  bool taken = false;
  std::optional<TimestampMs> opening_at;
};

struct ComplianceReport {
  PatientKey patient_key{};
  TimestampMs window_start = 0; // exclusive
  TimestampMs window_end = 0;   // inclusive
  std::vector<DoseOutcome> doses;
  int taken = 0;
  int scheduled = 0;
  double compliance_ratio = 1.0;

  Json to_json() const;
};

// Openings are matched to scheduled doses greedily in schedule order, each
// dose taking the nearest unclaimed opening within the tolerance window.
// `evidence` backs the alert when the window holds no observations at all.
std::pair<ComplianceReport, std::optional<AlertEvent>> eval_drug_compliance(
    const std::vector<CanonicalObservation> &window_obs,
    const ContractSpec &spec, TimestampMs window_start, TimestampMs window_end,
    const std::optional<cas::ContentAddress> &evidence = std::nullopt);

std::optional<AlertEvent> eval_adverse_condition(
    const std::vector<CanonicalObservation> &obs, const ContractSpec &spec);

// One event per distinct active fall observation, deduplicated by
// provenance address.
std::vector<AlertEvent> eval_emergency(
    const std::vector<CanonicalObservation> &obs, const ContractSpec &spec);

} // namespace blockiot::contracts
