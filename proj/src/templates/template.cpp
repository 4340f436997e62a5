#include "blockiot/templates/template.hpp"

#include <set>

#include "blockiot/core/json.hpp"
#include "blockiot/core/units.hpp"

namespace blockiot::templates {

namespace {

std::string join(const std::vector<std::string> &paths) {
  std::string msg = "template invalid";
  for (const auto &p : paths) {
    msg += "\n  ";
    msg += p;
  }
  return msg;
}

// Collects one entry per failing path instead of stopping at the first,
// so the whole document is checked in a single pass.
struct Errors {
  std::vector<std::string> paths;
  void add(const std::string &path, const std::string &why) {
    paths.push_back(path + ": " + why);
  }
};

std::string get_string(const Json &j, const std::string &path, const char *key,
                       Errors &errs, bool allow_empty = false) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    errs.add(path + "." + key, "expected a string");
    return {};
  }
  auto s = it->get<std::string>();
  if (s.empty() && !allow_empty)
    errs.add(path + "." + key, "must not be empty");
  return s;
}

std::int64_t get_int(const Json &j, const std::string &path, const char *key,
                     Errors &errs) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    errs.add(path + "." + key, "expected an integer");
    return 0;
  }
  return it->get<std::int64_t>();
}

std::vector<std::string> get_string_list(const Json &j, const std::string &path,
                                         Errors &errs) {
  std::vector<std::string> out;
  if (!j.is_array()) {
    errs.add(path, "expected an array of strings");
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string() || j[i].get<std::string>().empty()) {
      errs.add(path + "[" + std::to_string(i) + "]",
               "expected a non-empty string");
      continue;
    }
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

ParameterRule parse_rule(const Json &j, const std::string &path, Errors &errs) {
  ParameterRule r;
  if (!j.is_object()) {
    errs.add(path, "expected an object");
    return r;
  }
  r.source_key = get_string(j, path, "source_key", errs);
  r.target_code = get_string(j, path, "target_code", errs);

  auto kind_str = get_string(j, path, "kind", errs);
  if (auto k = kind_from_name(kind_str)) {
    r.kind = *k;
  } else if (!kind_str.empty()) {
    errs.add(path + ".kind", "unknown kind \"" + kind_str + "\"");
    return r;
  }

  if (auto it = j.find("unit"); it != j.end()) {
    if (!it->is_string()) {
      errs.add(path + ".unit", "expected a string");
    } else {
      r.unit = it->get<std::string>();
      if (!unit_is_known(*r.unit))
        errs.add(path + ".unit", "unknown unit \"" + *r.unit + "\"");
    }
  }
  if (auto it = j.find("code_set"); it != j.end())
    r.code_set = get_string_list(*it, path + ".code_set", errs);
  if (auto it = j.find("vector_layout"); it != j.end())
    r.vector_layout = get_string_list(*it, path + ".vector_layout", errs);
  if (auto it = j.find("component_keys"); it != j.end())
    r.component_keys = get_string_list(*it, path + ".component_keys", errs);

  switch (r.kind) {
    case MeasurementKind::Scalar:
      if (!r.unit) errs.add(path + ".unit", "scalar rules need a unit");
      break;
    case MeasurementKind::Vector:
      if (!r.unit) errs.add(path + ".unit", "vector rules need a unit");
      if (r.vector_layout.size() < 2)
        errs.add(path + ".vector_layout",
                 "vector rules need at least two labels");
      if (!r.component_keys.empty() &&
          r.component_keys.size() != r.vector_layout.size())
        errs.add(path + ".component_keys",
                 "must be parallel to vector_layout");
      break;
    case MeasurementKind::Code:
      if (r.code_set.empty())
        errs.add(path + ".code_set", "code rules need a non-empty code_set");
      break;
    default:
      break;
  }
  if (r.kind != MeasurementKind::Vector && !r.component_keys.empty())
    errs.add(path + ".component_keys", "only vector rules gather components");
  if (r.kind != MeasurementKind::Code && !r.code_set.empty())
    errs.add(path + ".code_set", "only code rules take a code_set");
  return r;
}

GuidelineParam parse_guideline(const Json &j, const std::string &path,
                               Errors &errs) {
  GuidelineParam g;
  if (!j.is_object()) {
    errs.add(path, "expected an object");
    return g;
  }
  g.target_code = get_string(j, path, "target_code", errs);
  g.unit = get_string(j, path, "unit", errs);
  if (!g.unit.empty() && !unit_is_known(g.unit))
    errs.add(path + ".unit", "unknown unit \"" + g.unit + "\"");

  auto read_limit = [&](const char *key) -> std::optional<double> {
    auto it = j.find(key);
    if (it == j.end()) return std::nullopt;
    if (!it->is_number()) {
      errs.add(path + "." + key, "expected a number");
      return std::nullopt;
    }
    return it->get<double>();
  };
  g.lower_limit = read_limit("lower_limit");
  g.upper_limit = read_limit("upper_limit");
  if (!g.lower_limit && !g.upper_limit)
    errs.add(path, "needs lower_limit or upper_limit");
  if (g.lower_limit && g.upper_limit && !(*g.lower_limit < *g.upper_limit))
    errs.add(path, "lower_limit must be below upper_limit");

  auto action_str = get_string(j, path, "action", errs);
  if (auto a = action_from_name(action_str)) {
    g.action = *a;
  } else if (!action_str.empty()) {
    errs.add(path + ".action", "unknown action \"" + action_str + "\"");
  }
  return g;
}

} // namespace

TemplateError::TemplateError(std::vector<std::string> p)
    : std::runtime_error(join(p)), paths(std::move(p)) {}

std::string_view action_name(GuidelineAction a) {
  switch (a) {
    case GuidelineAction::None: return "none";
    case GuidelineAction::Notify: return "notify";
    case GuidelineAction::Alert: return "alert";
    case GuidelineAction::Emergency: return "emergency";
  }
  return "none";
}

std::optional<GuidelineAction> action_from_name(std::string_view s) {
  if (s == "none") return GuidelineAction::None;
  if (s == "notify") return GuidelineAction::Notify;
  if (s == "alert") return GuidelineAction::Alert;
  if (s == "emergency") return GuidelineAction::Emergency;
  return std::nullopt;
}

std::string DeviceTemplate::id() const {
  return device_config.manufacturer + "/" + device_config.model;
}

const ParameterRule *DeviceTemplate::rule_for(std::string_view key) const {
  for (const auto &r : parameter_map)
    if (r.source_key == key) return &r;
  return nullptr;
}

DeviceTemplate load_template(std::string_view bytes) {
  Json doc = Json::parse(bytes, nullptr, false);
  if (doc.is_discarded())
    throw TemplateError({"document: not valid JSON"});
  if (!doc.is_object())
    throw TemplateError({"document: expected a JSON object"});

  Errors errs;
  DeviceTemplate t;

  if (auto it = doc.find("identifiers"); it != doc.end() && it->is_object()) {
    t.identifiers.patient_id_key =
        get_string(*it, "identifiers", "patient_id_key", errs);
    t.identifiers.device_id_key =
        get_string(*it, "identifiers", "device_id_key", errs);
    t.identifiers.nomenclature_code =
        get_int(*it, "identifiers", "nomenclature_code", errs);
    if (!t.identifiers.patient_id_key.empty() &&
        t.identifiers.patient_id_key == t.identifiers.device_id_key)
      errs.add("identifiers", "patient and device keys must differ");
  } else {
    errs.add("identifiers", "expected an object");
  }

  if (auto it = doc.find("device_config"); it != doc.end() && it->is_object()) {
    const Json &dc = *it;
    auto &cfg = t.device_config;
    cfg.specialization = get_string(dc, "device_config", "specialization", errs);
    cfg.manufacturer = get_string(dc, "device_config", "manufacturer", errs);
    cfg.model = get_string(dc, "device_config", "model", errs);
    cfg.serial_number = get_string(dc, "device_config", "serial_number", errs);
    cfg.firmware = get_string(dc, "device_config", "firmware", errs);
    cfg.hardware = get_string(dc, "device_config", "hardware", errs);
    cfg.software = get_string(dc, "device_config", "software", errs);
    cfg.regulatory =
        get_string(dc, "device_config", "regulatory", errs, true);
    if (auto tp = dc.find("time_properties");
        tp != dc.end() && tp->is_object()) {
      const std::string path = "device_config.time_properties";
      cfg.time_properties.clock_type = get_string(*tp, path, "clock_type", errs);
      cfg.time_properties.synchronization =
          get_string(*tp, path, "synchronization", errs);
      cfg.time_properties.resolution_ms = get_int(*tp, path, "resolution_ms", errs);
      cfg.time_properties.accuracy_ms = get_int(*tp, path, "accuracy_ms", errs);
      if (cfg.time_properties.resolution_ms < 0)
        errs.add(path + ".resolution_ms", "must be non-negative");
      if (cfg.time_properties.accuracy_ms < 0)
        errs.add(path + ".accuracy_ms", "must be non-negative");
    } else {
      errs.add("device_config.time_properties", "expected an object");
    }
  } else {
    errs.add("device_config", "expected an object");
  }

  if (auto it = doc.find("timestamp_key"); it != doc.end()) {
    if (!it->is_string() || it->get<std::string>().empty())
      errs.add("timestamp_key", "expected a non-empty string");
    else
      t.timestamp_key = it->get<std::string>();
  }

  if (auto it = doc.find("parameter_map"); it != doc.end() && it->is_array()) {
    for (std::size_t i = 0; i < it->size(); ++i)
      t.parameter_map.push_back(parse_rule(
          (*it)[i], "parameter_map[" + std::to_string(i) + "]", errs));
  } else {
    errs.add("parameter_map", "expected an array");
  }

  if (auto it = doc.find("guidelines"); it != doc.end()) {
    if (!it->is_array()) {
      errs.add("guidelines", "expected an array");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i)
        t.guidelines.push_back(parse_guideline(
            (*it)[i], "guidelines[" + std::to_string(i) + "]", errs));
    }
  }

  // Every payload key must be claimed by at most one rule, counting the
  // flat keys gathered by vector rules and the reserved identifier and
  // timestamp keys.
  std::set<std::string> claimed;
  auto claim = [&](const std::string &key, const std::string &path) {
    if (key.empty()) return;
    if (!claimed.insert(key).second)
      errs.add(path, "duplicate payload key \"" + key + "\"");
  };
  claim(t.identifiers.patient_id_key, "identifiers.patient_id_key");
  claim(t.identifiers.device_id_key, "identifiers.device_id_key");
  if (t.timestamp_key) claim(*t.timestamp_key, "timestamp_key");
  for (std::size_t i = 0; i < t.parameter_map.size(); ++i) {
    const auto &r = t.parameter_map[i];
    const std::string path = "parameter_map[" + std::to_string(i) + "]";
    claim(r.source_key, path + ".source_key");
    for (const auto &ck : r.component_keys)
      claim(ck, path + ".component_keys");
  }

  if (!errs.paths.empty()) throw TemplateError(std::move(errs.paths));
  return t;
}

} // namespace blockiot::templates
