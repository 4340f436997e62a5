#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockiot/core/types.hpp"

namespace blockiot::templates {

// Thrown by load_template with every failing path collected, so a broken
// template file can be fixed in one round trip.
struct TemplateError : std::runtime_error {
  std::vector<std::string> paths;
  explicit TemplateError(std::vector<std::string> p);
};

struct TimeProperties {
  std::string clock_type;
  std::string synchronization; // "synced" clocks are trusted as-is
  std::int64_t resolution_ms = 0;
  std::int64_t accuracy_ms = 0;
};

struct DeviceConfig {
  std::string specialization;
  std::string manufacturer;
  std::string model;
  std::string serial_number;
  std::string firmware;
  std::string hardware;
  std::string software;
  TimeProperties time_properties;
  std::string regulatory;
};

struct Identifiers {
  std::string patient_id_key;
  std::string device_id_key;
  std::int64_t nomenclature_code = 0;
};

struct ParameterRule {
  std::string source_key;
  std::string target_code;
  MeasurementKind kind{};
  std::optional<std::string> unit;        // scalar and vector rules
  std::vector<std::string> code_set;      // code rules
  std::vector<std::string> vector_layout; // vector rules: element labels
  // Vector rules may gather several flat payload keys into one reading
  // (e.g. sys/dia/map); parallel to vector_layout. When absent the payload
  // carries the whole vector as an array under source_key.
  std::vector<std::string> component_keys;
};

enum class GuidelineAction { None, Notify, Alert, Emergency };

std::string_view action_name(GuidelineAction a);
std::optional<GuidelineAction> action_from_name(std::string_view s);

struct GuidelineParam {
  std::string target_code;
  std::optional<double> lower_limit;
  std::optional<double> upper_limit;
  std::string unit;
  GuidelineAction action = GuidelineAction::None;
};

struct DeviceTemplate {
  Identifiers identifiers;
  DeviceConfig device_config;
  // Payload key carrying the device's own measurement timestamp, when the
  // device reports one.
  std::optional<std::string> timestamp_key;
  std::vector<ParameterRule> parameter_map;
  std::vector<GuidelineParam> guidelines;

  // Registry key: one template per device model.
  std::string id() const;

  const ParameterRule *rule_for(std::string_view source_key) const;
};

DeviceTemplate load_template(std::string_view bytes);

} // namespace blockiot::templates
