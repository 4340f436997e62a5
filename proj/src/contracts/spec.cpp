#include "blockiot/contracts/spec.hpp"

#include <algorithm>

#include "blockiot/core/units.hpp"

namespace blockiot::contracts {

namespace {

std::string join(const std::vector<std::string> &paths) {
  std::string msg = "contract spec invalid";
  for (const auto &p : paths) {
    msg += "\n  ";
    msg += p;
  }
  return msg;
}

// "HH:MM" -> minutes after midnight.
std::optional<int> parse_time_of_day(std::string_view s) {
  if (s.size() != 5 || s[2] != ':') return std::nullopt;
  auto digits = [](char a, char b) -> std::optional<int> {
    if (a < '0' || a > '9' || b < '0' || b > '9') return std::nullopt;
    return (a - '0') * 10 + (b - '0');
  };
  auto h = digits(s[0], s[1]);
  auto m = digits(s[3], s[4]);
  if (!h || !m || *h > 23 || *m > 59) return std::nullopt;
  return *h * 60 + *m;
}

std::string format_time_of_day(int minutes) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> p)
    : std::runtime_error(join(p)), paths(std::move(p)) {}

std::string_view contract_kind_name(ContractKind k) {
  switch (k) {
    case ContractKind::AccessControl: return "access_control";
    case ContractKind::DrugCompliance: return "drug_compliance";
    case ContractKind::AdverseCondition: return "adverse_condition";
    case ContractKind::EmergencyAlert: return "emergency_alert";
    case ContractKind::Summarization: return "summarization";
  }
  return "access_control";
}

std::optional<ContractKind> contract_kind_from_name(std::string_view s) {
  if (s == "access_control") return ContractKind::AccessControl;
  if (s == "drug_compliance") return ContractKind::DrugCompliance;
  if (s == "adverse_condition") return ContractKind::AdverseCondition;
  if (s == "emergency_alert") return ContractKind::EmergencyAlert;
  if (s == "summarization") return ContractKind::Summarization;
  return std::nullopt;
}

namespace {

templates::GuidelineParam guideline_from_json(const Json &j,
                                              const std::string &path,
                                              std::vector<std::string> &errs) {
  templates::GuidelineParam g;
  if (!j.is_object()) {
    errs.push_back(path + ": expected an object");
    return g;
  }
  auto str = [&](const char *key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
      errs.push_back(path + "." + key + ": expected a non-empty string");
      return {};
    }
    return it->get<std::string>();
  };
  g.target_code = str("target_code");
  g.unit = str("unit");
  if (!g.unit.empty() && !unit_is_known(g.unit))
    errs.push_back(path + ".unit: unknown unit \"" + g.unit + "\"");
  auto num = [&](const char *key) -> std::optional<double> {
    auto it = j.find(key);
    if (it == j.end()) return std::nullopt;
    if (!it->is_number()) {
      errs.push_back(path + "." + key + ": expected a number");
      return std::nullopt;
    }
    return it->get<double>();
  };
  g.lower_limit = num("lower_limit");
  g.upper_limit = num("upper_limit");
  if (!g.lower_limit && !g.upper_limit)
    errs.push_back(path + ": needs lower_limit or upper_limit");
  if (g.lower_limit && g.upper_limit && !(*g.lower_limit < *g.upper_limit))
    errs.push_back(path + ": lower_limit must be below upper_limit");
  auto action = str("action");
  if (auto a = templates::action_from_name(action)) {
    g.action = *a;
  } else if (!action.empty()) {
    errs.push_back(path + ".action: unknown action \"" + action + "\"");
  }
  return g;
}

} // namespace

ContractSpec contract_spec_from_json(const Json &j) {
  std::vector<std::string> errs;
  ContractSpec s;
  if (!j.is_object()) throw ConfigError({"contract: expected an object"});

  auto kind_it = j.find("contract_kind");
  if (kind_it == j.end() || !kind_it->is_string()) {
    errs.push_back("contract_kind: expected a string");
  } else if (auto k = contract_kind_from_name(kind_it->get<std::string>())) {
    s.kind = *k;
  } else {
    errs.push_back("contract_kind: unknown kind \"" +
                   kind_it->get<std::string>() + "\"");
  }

  if (j.contains("patient_key")) {
    try {
      s.patient_key = require_digest(j, "patient_key");
    } catch (const CodecError &e) {
      errs.push_back(e.what());
    }
  }

  const Json params =
      j.contains("parameters") && j["parameters"].is_object()
          ? j["parameters"]
          : Json::object();

  if (auto it = params.find("guidelines"); it != params.end()) {
    if (!it->is_array()) {
      errs.push_back("parameters.guidelines: expected an array");
    } else {
      for (std::size_t i = 0; i < it->size(); ++i)
        s.guidelines.push_back(guideline_from_json(
            (*it)[i], "parameters.guidelines[" + std::to_string(i) + "]",
            errs));
    }
  }

  auto opt_number = [&](const char *key, double &slot) {
    if (auto it = params.find(key); it != params.end()) {
      if (!it->is_number())
        errs.push_back(std::string("parameters.") + key +
                       ": expected a number");
      else
        slot = it->get<double>();
    }
  };
  auto opt_int = [&](const char *key, int &slot) {
    if (auto it = params.find(key); it != params.end()) {
      if (!it->is_number_integer())
        errs.push_back(std::string("parameters.") + key +
                       ": expected an integer");
      else
        slot = it->get<int>();
    }
  };
  auto opt_bool = [&](const char *key, bool &slot) {
    if (auto it = params.find(key); it != params.end()) {
      if (!it->is_boolean())
        errs.push_back(std::string("parameters.") + key +
                       ": expected a boolean");
      else
        slot = it->get<bool>();
    }
  };
  auto opt_string = [&](const char *key, std::string &slot) {
    if (auto it = params.find(key); it != params.end()) {
      if (!it->is_string() || it->get<std::string>().empty())
        errs.push_back(std::string("parameters.") + key +
                       ": expected a non-empty string");
      else
        slot = it->get<std::string>();
    }
  };
  auto opt_string_list = [&](const char *key, std::vector<std::string> &slot) {
    if (auto it = params.find(key); it != params.end()) {
      if (!it->is_array()) {
        errs.push_back(std::string("parameters.") + key +
                       ": expected an array");
        return;
      }
      slot.clear();
      for (std::size_t i = 0; i < it->size(); ++i) {
        if (!(*it)[i].is_string() || (*it)[i].get<std::string>().empty()) {
          errs.push_back(std::string("parameters.") + key + "[" +
                         std::to_string(i) + "]: expected a non-empty string");
          continue;
        }
        slot.push_back((*it)[i].get<std::string>());
      }
    }
  };

  switch (s.kind) {
    case ContractKind::DrugCompliance: {
      if (auto it = params.find("schedule"); it != params.end()) {
        if (!it->is_array()) {
          errs.push_back("parameters.schedule: expected an array");
        } else {
          for (std::size_t i = 0; i < it->size(); ++i) {
            const Json &e = (*it)[i];
            std::optional<int> tod;
            if (e.is_string()) tod = parse_time_of_day(e.get<std::string>());
            if (!tod) {
              errs.push_back("parameters.schedule[" + std::to_string(i) +
                             "]: expected \"HH:MM\"");
              continue;
            }
            s.compliance.times_minutes.push_back(*tod);
          }
        }
      }
      std::sort(s.compliance.times_minutes.begin(),
                s.compliance.times_minutes.end());
      if (s.compliance.times_minutes.empty())
        errs.push_back("parameters.schedule: needs at least one dose time");
      opt_int("tolerance_minutes", s.compliance.tolerance_minutes);
      if (s.compliance.tolerance_minutes <= 0)
        errs.push_back("parameters.tolerance_minutes: must be positive");
      opt_number("alert_threshold", s.compliance.alert_threshold);
      if (s.compliance.alert_threshold < 0 || s.compliance.alert_threshold > 1)
        errs.push_back("parameters.alert_threshold: must be within [0, 1]");
      opt_string("opening_code", s.compliance.opening_code);
      break;
    }
    case ContractKind::AdverseCondition: {
      opt_number("min_bpm", s.adverse.min_bpm);
      opt_number("max_bpm", s.adverse.max_bpm);
      if (!(s.adverse.min_bpm < s.adverse.max_bpm))
        errs.push_back("parameters.min_bpm: must be below max_bpm");
      opt_bool("flag_irregular", s.adverse.flag_irregular);
      opt_string("rate_code", s.adverse.rate_code);
      opt_string("irregular_state", s.adverse.irregular_state);
      break;
    }
    case ContractKind::EmergencyAlert: {
      opt_string_list("contacts", s.emergency.contacts);
      if (s.emergency.contacts.empty())
        errs.push_back("parameters.contacts: needs at least one contact");
      opt_string("fall_code", s.emergency.fall_code);
      break;
    }
    case ContractKind::Summarization: {
      opt_string_list("codes", s.summarization.codes);
      if (s.summarization.codes.empty())
        errs.push_back("parameters.codes: needs at least one code");
      opt_string_list("statistics", s.summarization.statistics);
      for (const auto &st : s.summarization.statistics)
        if (st != "count" && st != "min" && st != "max" && st != "mean" &&
            st != "latest")
          errs.push_back("parameters.statistics: unknown statistic \"" + st +
                         "\"");
      break;
    }
    case ContractKind::AccessControl:
      break;
  }

  if (!errs.empty()) throw ConfigError(std::move(errs));
  return s;
}

Json contract_spec_to_json(const ContractSpec &s) {
  Json params = Json::object();
  if (!s.guidelines.empty()) {
    Json gs = Json::array();
    for (const auto &g : s.guidelines) {
      Json e{{"target_code", g.target_code},
             {"unit", g.unit},
             {"action", std::string(templates::action_name(g.action))}};
      if (g.lower_limit) e["lower_limit"] = *g.lower_limit;
      if (g.upper_limit) e["upper_limit"] = *g.upper_limit;
      gs.push_back(std::move(e));
    }
    params["guidelines"] = std::move(gs);
  }
  switch (s.kind) {
    case ContractKind::DrugCompliance: {
      Json sched = Json::array();
      for (int t : s.compliance.times_minutes)
        sched.push_back(format_time_of_day(t));
      params["schedule"] = std::move(sched);
      params["tolerance_minutes"] = s.compliance.tolerance_minutes;
      params["alert_threshold"] = s.compliance.alert_threshold;
      params["opening_code"] = s.compliance.opening_code;
      break;
    }
    case ContractKind::AdverseCondition:
      params["min_bpm"] = s.adverse.min_bpm;
      params["max_bpm"] = s.adverse.max_bpm;
      params["flag_irregular"] = s.adverse.flag_irregular;
      params["rate_code"] = s.adverse.rate_code;
      params["irregular_state"] = s.adverse.irregular_state;
      break;
    case ContractKind::EmergencyAlert:
      params["contacts"] = s.emergency.contacts;
      params["fall_code"] = s.emergency.fall_code;
      break;
    case ContractKind::Summarization:
      params["codes"] = s.summarization.codes;
      params["statistics"] = s.summarization.statistics;
      break;
    case ContractKind::AccessControl:
      break;
  }
  return Json{{"contract_kind", std::string(contract_kind_name(s.kind))},
              {"patient_key", digest_hex(s.patient_key)},
              {"parameters", std::move(params)}};
}

std::vector<ContractSpec> load_contract_file(std::string_view bytes) {
  Json doc = Json::parse(bytes, nullptr, false);
  if (doc.is_discarded())
    throw ConfigError({"document: not valid JSON"});
  if (!doc.is_object())
    throw ConfigError({"document: expected a JSON object"});

  std::vector<std::string> errs;
  PatientKey key{};
  try {
    key = require_digest(doc, "patient_key");
  } catch (const CodecError &e) {
    errs.push_back(e.what());
  }

  std::vector<ContractSpec> out;
  auto it = doc.find("contracts");
  if (it == doc.end() || !it->is_array()) {
    errs.push_back("contracts: expected an array");
  } else {
    for (std::size_t i = 0; i < it->size(); ++i) {
      try {
        ContractSpec s = contract_spec_from_json((*it)[i]);
        s.patient_key = key;
        out.push_back(std::move(s));
      } catch (const ConfigError &e) {
        for (const auto &p : e.paths)
          errs.push_back("contracts[" + std::to_string(i) + "]." + p);
      }
    }
  }
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return out;
}

} // namespace blockiot::contracts
