#include "blockiot/contracts/engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace blockiot::contracts {

namespace {

constexpr TimestampMs kDayMs = 86'400'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

int severity_rank(Severity s) { return static_cast<int>(s); }

Severity action_severity(templates::GuidelineAction a) {
  switch (a) {
    case templates::GuidelineAction::Notify: return Severity::Notify;
    case templates::GuidelineAction::Alert: return Severity::Alert;
    case templates::GuidelineAction::Emergency: return Severity::Emergency;
    case templates::GuidelineAction::None: return Severity::Notify;
  }
  return Severity::Notify;
}

std::vector<cas::ContentAddress>
sorted_distinct(std::vector<cas::ContentAddress> addrs) {
  std::sort(addrs.begin(), addrs.end());
  addrs.erase(std::unique(addrs.begin(), addrs.end()), addrs.end());
  return addrs;
}

std::string fmt_num(double v) {
  // Shortest round-trip form, same as the JSON encoder, so messages are
  // stable across replays.
  return Json(v).dump();
}

} // namespace

std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::Notify: return "notify";
    case Severity::Alert: return "alert";
    case Severity::Emergency: return "emergency";
  }
  return "notify";
}

std::optional<Severity> severity_from_name(std::string_view s) {
  if (s == "notify") return Severity::Notify;
  if (s == "alert") return Severity::Alert;
  if (s == "emergency") return Severity::Emergency;
  return std::nullopt;
}

std::string AlertEvent::dedup_key() const {
  std::string key(contract_kind_name(contract_kind));
  for (const auto &a : triggering) {
    key += '|';
    key += a.hex();
  }
  return key;
}

Json AlertEvent::to_json() const {
  Json trig = Json::array();
  for (const auto &a : triggering) trig.push_back(a.hex());
  Json j{{"severity", std::string(severity_name(severity))},
         {"patient_key", digest_hex(patient_key)},
         {"contract_kind", std::string(contract_kind_name(contract_kind))},
         {"triggering", std::move(trig)},
         {"message", message},
         {"emitted_at", format_timestamp(emitted_at)}};
  if (!contacts.empty()) j["contacts"] = contacts;
  return j;
}

AlertEvent alert_event_from_json(const Json &j) {
  AlertEvent e;
  auto sev = severity_from_name(require_string(j, "severity"));
  if (!sev) throw CodecError("unknown severity");
  e.severity = *sev;
  e.patient_key = require_digest(j, "patient_key");
  auto kind = contract_kind_from_name(require_string(j, "contract_kind"));
  if (!kind) throw CodecError("unknown contract kind");
  e.contract_kind = *kind;
  const Json &trig = require_field(j, "triggering");
  if (!trig.is_array() || trig.empty())
    throw CodecError("triggering: expected a non-empty array");
  for (const auto &t : trig) {
    if (!t.is_string()) throw CodecError("triggering entry not a string");
    auto a = cas::ContentAddress::from_hex(t.get<std::string>());
    if (!a) throw CodecError("triggering entry not a content address");
    e.triggering.push_back(*a);
  }
  e.message = require_string(j, "message");
  e.emitted_at = require_timestamp(j, "emitted_at");
  if (auto it = j.find("contacts"); it != j.end()) {
    if (!it->is_array()) throw CodecError("contacts: expected an array");
    for (const auto &c : *it) {
      if (!c.is_string()) throw CodecError("contact not a string");
      e.contacts.push_back(c.get<std::string>());
    }
  }
  return e;
}

Json ComplianceReport::to_json() const {
  Json doses_json = Json::array();
  for (const auto &d : doses) {
    Json e{{"scheduled_at", format_timestamp(d.scheduled_at)},
           {"taken", d.taken}};
    if (d.opening_at) e["opening_at"] = format_timestamp(*d.opening_at);
    doses_json.push_back(std::move(e));
  }
  return Json{{"patient_key", digest_hex(patient_key)},
              {"window_start", format_timestamp(window_start)},
              {"window_end", format_timestamp(window_end)},
              {"doses", std::move(doses_json)},
              {"taken", taken},
              {"scheduled", scheduled},
              {"compliance_ratio", compliance_ratio}};
}

std::pair<ComplianceReport, std::optional<AlertEvent>> eval_drug_compliance(
    const std::vector<CanonicalObservation> &window_obs,
    const ContractSpec &spec, TimestampMs window_start, TimestampMs window_end,
    const std::optional<cas::ContentAddress> &evidence) {
  if (spec.kind != ContractKind::DrugCompliance)
    throw ConfigError({"eval_drug_compliance: wrong contract kind"});
  if (spec.compliance.times_minutes.empty())
    throw ConfigError({"eval_drug_compliance: empty dose schedule"});
  if (!(window_start <= window_end))
    throw ConfigError({"eval_drug_compliance: window_start after window_end"});

  ComplianceReport report;
  report.patient_key = spec.patient_key;
  report.window_start = window_start;
  report.window_end = window_end;

  // Scheduled doses: every schedule time on every UTC day inside
  // (window_start, window_end].
  for (std::int64_t day = floor_div(window_start, kDayMs);
       day <= floor_div(window_end, kDayMs); ++day) {
    for (int minutes : spec.compliance.times_minutes) {
      TimestampMs at = day * kDayMs + TimestampMs(minutes) * 60'000;
      if (at > window_start && at <= window_end)
        report.doses.push_back({at, false, std::nullopt});
    }
  }
  std::sort(report.doses.begin(), report.doses.end(),
            [](const DoseOutcome &a, const DoseOutcome &b) {
              return a.scheduled_at < b.scheduled_at;
            });

  // Active bottle-opening events, ordered by (time, address) so ties are
  // claimed deterministically.
  struct Opening {
    TimestampMs at;
    cas::ContentAddress addr;
    bool claimed = false;
  };
  std::vector<Opening> openings;
  std::vector<cas::ContentAddress> opening_addrs;
  for (const auto &o : window_obs) {
    if (o.code_binding != spec.compliance.opening_code) continue;
    if (o.kind != MeasurementKind::EventState) continue;
    opening_addrs.push_back(o.provenance);
    const auto &ev = std::get<EventStateValue>(o.value);
    if (!ev.active) continue;
    openings.push_back({o.effective_time, o.provenance});
  }
  std::sort(openings.begin(), openings.end(),
            [](const Opening &a, const Opening &b) {
              if (a.at != b.at) return a.at < b.at;
              return a.addr < b.addr;
            });

  const TimestampMs tol =
      TimestampMs(spec.compliance.tolerance_minutes) * 60'000;
  for (auto &dose : report.doses) {
    std::size_t best = openings.size();
    TimestampMs best_dist = tol + 1;
    for (std::size_t i = 0; i < openings.size(); ++i) {
      if (openings[i].claimed) continue;
      TimestampMs dist = std::llabs(openings[i].at - dose.scheduled_at);
      if (dist <= tol && dist < best_dist) {
        best = i;
        best_dist = dist;
      }
    }
    if (best < openings.size()) {
      openings[best].claimed = true;
      dose.taken = true;
      dose.opening_at = openings[best].at;
    }
  }

  report.scheduled = static_cast<int>(report.doses.size());
  for (const auto &d : report.doses) report.taken += d.taken ? 1 : 0;
  // Zero scheduled doses is vacuous compliance by convention.
  report.compliance_ratio =
      report.scheduled == 0
          ? 1.0
          : static_cast<double>(report.taken) / report.scheduled;

  std::optional<AlertEvent> alert;
  if (report.compliance_ratio < spec.compliance.alert_threshold) {
    std::vector<cas::ContentAddress> trig = sorted_distinct(opening_addrs);
    TimestampMs emitted = window_end;
    if (trig.empty()) {
      // Nothing from the bottle at all: cite whatever the window held.
      std::vector<cas::ContentAddress> all;
      for (const auto &o : window_obs) all.push_back(o.provenance);
      trig = sorted_distinct(std::move(all));
    } else {
      emitted = 0;
      for (const auto &o : window_obs)
        if (o.code_binding == spec.compliance.opening_code)
          emitted = std::max(emitted, o.effective_time);
    }
    if (trig.empty() && evidence) trig.push_back(*evidence);
    if (!trig.empty()) {
      AlertEvent e;
      e.severity = Severity::Alert;
      e.patient_key = spec.patient_key;
      e.contract_kind = ContractKind::DrugCompliance;
      e.triggering = std::move(trig);
      e.message = "compliance " + std::to_string(report.taken) + "/" +
                  std::to_string(report.scheduled) + " below threshold " +
                  fmt_num(spec.compliance.alert_threshold);
      e.emitted_at = emitted;
      alert = std::move(e);
    }
  }
  return {std::move(report), std::move(alert)};
}

std::optional<AlertEvent> eval_adverse_condition(
    const std::vector<CanonicalObservation> &obs, const ContractSpec &spec) {
  if (spec.kind != ContractKind::AdverseCondition)
    throw ConfigError({"eval_adverse_condition: wrong contract kind"});

  std::vector<std::string> messages;
  std::vector<cas::ContentAddress> trig;
  Severity severity = Severity::Notify;
  TimestampMs emitted = 0;

  auto record = [&](const CanonicalObservation &o, Severity s,
                    std::string msg) {
    messages.push_back(std::move(msg));
    trig.push_back(o.provenance);
    if (severity_rank(s) > severity_rank(severity)) severity = s;
    emitted = std::max(emitted, o.effective_time);
  };

  for (const auto &o : obs) {
    if (o.kind == MeasurementKind::Scalar &&
        o.code_binding == spec.adverse.rate_code) {
      double v = std::get<ScalarValue>(o.value).magnitude;
      if (v < spec.adverse.min_bpm)
        record(o, Severity::Alert,
               "heart rate " + fmt_num(v) + " below lower bound " +
                   fmt_num(spec.adverse.min_bpm));
      else if (v > spec.adverse.max_bpm)
        record(o, Severity::Alert,
               "heart rate " + fmt_num(v) + " exceeds upper bound " +
                   fmt_num(spec.adverse.max_bpm));
    }
    if (spec.adverse.flag_irregular && o.kind == MeasurementKind::EventState) {
      const auto &ev = std::get<EventStateValue>(o.value);
      if (ev.active && ev.state_name == spec.adverse.irregular_state)
        record(o, Severity::Alert, "irregular pulse reported");
    }
    // Generic guideline limits over scalar codes.
    for (const auto &g : spec.guidelines) {
      if (g.action == templates::GuidelineAction::None) continue;
      if (o.kind != MeasurementKind::Scalar || o.code_binding != g.target_code)
        continue;
      double v = std::get<ScalarValue>(o.value).magnitude;
      if (g.lower_limit && v < *g.lower_limit)
        record(o, action_severity(g.action),
               g.target_code + " " + fmt_num(v) + " below lower bound " +
                   fmt_num(*g.lower_limit));
      else if (g.upper_limit && v > *g.upper_limit)
        record(o, action_severity(g.action),
               g.target_code + " " + fmt_num(v) + " exceeds upper bound " +
                   fmt_num(*g.upper_limit));
    }
  }

  if (messages.empty()) return std::nullopt;
  AlertEvent e;
  e.severity = severity;
  e.patient_key = spec.patient_key;
  e.contract_kind = ContractKind::AdverseCondition;
  e.triggering = sorted_distinct(std::move(trig));
  std::string msg;
  for (const auto &m : messages) msg += (msg.empty() ? "" : "; ") + m;
  e.message = std::move(msg);
  e.emitted_at = emitted;
  return e;
}

std::vector<AlertEvent> eval_emergency(
    const std::vector<CanonicalObservation> &obs, const ContractSpec &spec) {
  if (spec.kind != ContractKind::EmergencyAlert)
    throw ConfigError({"eval_emergency: wrong contract kind"});

  std::vector<AlertEvent> out;
  std::set<cas::ContentAddress> seen;
  for (const auto &o : obs) {
    if (o.kind != MeasurementKind::EventState) continue;
    if (o.code_binding != spec.emergency.fall_code) continue;
    const auto &ev = std::get<EventStateValue>(o.value);
    if (!ev.active) continue;
    if (!seen.insert(o.provenance).second) continue;
    AlertEvent e;
    e.severity = Severity::Emergency;
    e.patient_key = spec.patient_key;
    e.contract_kind = ContractKind::EmergencyAlert;
    e.triggering = {o.provenance};
    e.message = "fall detected";
    e.emitted_at = o.effective_time;
    e.contacts = spec.emergency.contacts;
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(),
            [](const AlertEvent &a, const AlertEvent &b) {
              if (a.emitted_at != b.emitted_at)
                return a.emitted_at < b.emitted_at;
              return a.triggering[0] < b.triggering[0];
            });
  return out;
}

} // namespace blockiot::contracts
