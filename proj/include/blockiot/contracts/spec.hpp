#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockiot/core/json.hpp"
#include "blockiot/templates/template.hpp"

namespace blockiot::contracts {

struct ConfigError : std::runtime_error {
  std::vector<std::string> paths;
  explicit ConfigError(std::vector<std::string> p);
};

enum class ContractKind {
  AccessControl,
  DrugCompliance,
  AdverseCondition,
  EmergencyAlert,
  Summarization,
};

std::string_view contract_kind_name(ContractKind k);
std::optional<ContractKind> contract_kind_from_name(std::string_view s);

struct DoseScheduleParams {
  std::vector<int> times_minutes; // minutes after UTC midnight, sorted
  int tolerance_minutes = 60;
  double alert_threshold = 0.8;
  std::string opening_code = "bottle-opened";
};

struct AdverseParams {
  double min_bpm = 50;
  double max_bpm = 120;
  bool flag_irregular = true;
  std::string rate_code = "heart-rate";
  std::string irregular_state = "pulse_irregular";
};

struct EmergencyParams {
  std::vector<std::string> contacts;
  std::string fall_code = "fall-detected";
};

struct SummarizationParams {
  std::vector<std::string> codes; // "blood-pressure.systolic" selects an element
  std::vector<std::string> statistics = {"count", "min", "max", "mean",
                                         "latest"};
};

// Declarative parameter set interpreted by the fixed engine. Only the
// section matching `kind` is meaningful.
struct ContractSpec {
  ContractKind kind = ContractKind::AccessControl;
  PatientKey patient_key{};
  std::vector<templates::GuidelineParam> guidelines;
  DoseScheduleParams compliance;
  AdverseParams adverse;
  EmergencyParams emergency;
  SummarizationParams summarization;
};

ContractSpec contract_spec_from_json(const Json &j);
Json contract_spec_to_json(const ContractSpec &s);

// One file per patient: {"patient_key": hex, "contracts": [spec...]}.
std::vector<ContractSpec> load_contract_file(std::string_view bytes);

} // namespace blockiot::contracts
