#include "blockiot/fhir/service.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>

#include "blockiot/cas/folder.hpp"
#include "blockiot/contracts/access.hpp"

namespace blockiot::fhir {

namespace {

struct DateBound {
  TimestampMs ge = std::numeric_limits<TimestampMs>::min();
  TimestampMs le = std::numeric_limits<TimestampMs>::max();
};

TimestampMs day_start(const CivilDate &d) {
  return days_from_civil(d) * 86'400'000;
}

void apply_date(DateBound &bound, const std::string &value) {
  if (value.size() < 3) throw SearchError("bad date parameter: " + value);
  std::string prefix = value.substr(0, 2);
  std::string rest = value.substr(2);
  TimestampMs lo, hi;
  if (auto d = parse_date(rest)) {
    lo = day_start(*d);
    hi = lo + 86'400'000 - 1;
  } else if (auto t = parse_timestamp(rest)) {
    lo = hi = *t;
  } else {
    throw SearchError("bad date parameter: " + value);
  }
  if (prefix == "ge") {
    bound.ge = std::max(bound.ge, lo);
  } else if (prefix == "le") {
    bound.le = std::min(bound.le, hi);
  } else if (prefix == "eq") {
    bound.ge = std::max(bound.ge, lo);
    bound.le = std::min(bound.le, hi);
  } else {
    throw SearchError("bad date parameter: " + value);
  }
}

std::size_t parse_size(const std::string &value, const char *name) {
  std::size_t out = 0;
  auto [end, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size())
    throw SearchError(std::string("bad ") + name + " parameter: " + value);
  return out;
}

struct Paging {
  std::size_t count = 100;
  std::size_t offset = 0;
};

// Pulls one optional occurrence of a parameter; repeats are an error.
std::optional<std::string> take_one(const Params &params, const char *name) {
  auto [lo, hi] = params.equal_range(name);
  if (lo == hi) return std::nullopt;
  if (std::next(lo) != hi)
    throw SearchError(std::string("parameter repeats: ") + name);
  return lo->second;
}

Paging parse_paging(const Params &params) {
  Paging p;
  if (auto count = take_one(params, "_count")) {
    p.count = parse_size(*count, "_count");
    if (p.count == 0 || p.count > 1000)
      throw SearchError("bad _count parameter: " + *count);
  }
  if (auto offset = take_one(params, "_offset"))
    p.offset = parse_size(*offset, "_offset");
  return p;
}

void reject_unknown(const Params &params,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto &[key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw SearchError("unsupported parameter: " + key);
  }
}

// entries are (fullUrl, resource) pairs, already sorted.
Json make_bundle(const std::vector<std::pair<std::string, Json>> &all,
                 const Paging &paging, const std::string &query_prefix) {
  auto page_url = [&](std::size_t offset) {
    return query_prefix + "&_count=" + std::to_string(paging.count) +
           "&_offset=" + std::to_string(offset);
  };
  Json links = Json::array(
      {Json{{"relation", "self"}, {"url", page_url(paging.offset)}}});
  if (paging.offset + paging.count < all.size())
    links.push_back(Json{{"relation", "next"},
                         {"url", page_url(paging.offset + paging.count)}});

  Json bundle{{"resourceType", "Bundle"},
              {"type", "searchset"},
              {"total", all.size()},
              {"link", std::move(links)}};
  if (paging.offset < all.size()) {
    Json entries = Json::array();
    std::size_t end = std::min(all.size(), paging.offset + paging.count);
    for (std::size_t i = paging.offset; i < end; ++i)
      entries.push_back(Json{{"fullUrl", all[i].first},
                             {"resource", all[i].second},
                             {"search", {{"mode", "match"}}}});
    bundle["entry"] = std::move(entries);
  }
  return bundle;
}

} // namespace

FhirService::FhirService(const cas::Store &store, const cas::NameIndex &names,
                         const gateway::Registration &registration,
                         const templates::TemplateRegistry &templates,
                         const ledger::Ledger &ledger)
    : store_(store),
      names_(names),
      registration_(registration),
      templates_(templates),
      ledger_(ledger) {}

Json FhirService::capability_statement() const {
  auto search_param = [](const char *name, const char *type) {
    return Json{{"name", name}, {"type", type}};
  };
  auto resource = [](const char *type, Json params) {
    return Json{{"type", type},
                {"interaction", Json::array({Json{{"code", "search-type"}}})},
                {"searchParam", std::move(params)}};
  };
  return Json{
      {"resourceType", "CapabilityStatement"},
      {"status", "active"},
      {"date", "2026-01-01"},
      {"kind", "instance"},
      {"fhirVersion", "4.0.1"},
      {"format", Json::array({"json"})},
      {"rest",
       Json::array(
           {Json{{"mode", "server"},
                 {"resource",
                  Json::array(
                      {resource("Observation",
                                Json::array(
                                    {search_param("patient", "reference"),
                                     search_param("code", "token"),
                                     search_param("date", "date"),
                                     search_param("_count", "number"),
                                     search_param("_offset", "number")})),
                       resource("Patient",
                                Json::array(
                                    {search_param("identifier", "token"),
                                     search_param("_count", "number"),
                                     search_param("_offset", "number")})),
                       resource("Device",
                                Json::array(
                                    {search_param("patient", "reference"),
                                     search_param("_count", "number"),
                                     search_param("_offset",
                                                  "number")}))})}}})}};
}

Json FhirService::search(std::string_view resource_type, const Params &params,
                         const contracts::Principal &who) const {
  if (resource_type == "Observation") return search_observations(params, who);
  if (resource_type == "Patient") return search_patients(params, who);
  if (resource_type == "Device") return search_devices(params, who);
  throw SearchError("unsupported resource type: " +
                    std::string(resource_type));
}

PatientKey FhirService::resolve_patient_param(
    const std::string &value, const contracts::Principal &who) const {
  std::string v = value;
  if (v.rfind("Patient/", 0) == 0) v = v.substr(8);
  if (const auto *p = registration_.patient_by_id(v))
    return p->identity.patient_key;
  Digest32 key;
  if (digest_from_hex(v, key)) {
    if (const auto *p = registration_.patient_by_key(key))
      return p->identity.patient_key;
  }
  // Unknown patients are indistinguishable from denied ones: no roster
  // enumeration through the search API.
  (void)who;
  throw gateway::AuthorizationError("authorization error");
}

void FhirService::require_read(const contracts::Principal &who,
                               const PatientKey &patient) const {
  auto state = ledger_.state();
  if (!contracts::check_access(state->access, who, patient,
                               contracts::AccessAction::Read))
    throw gateway::AuthorizationError("authorization error");
}

std::vector<CanonicalObservation> FhirService::observations_for(
    const PatientKey &patient) const {
  std::vector<CanonicalObservation> out;
  const auto *rp = registration_.patient_by_key(patient);
  if (!rp) return out;
  cas::ContentAddress root;
  try {
    root = names_.resolve(patient, rp->name_keys().public_key);
  } catch (const cas::NotFoundError &) {
    return out; // nothing published yet
  }
  cas::FolderNode folder = cas::load_folder(store_, root);
  std::set<std::string> seen;
  for (const auto &entry : folder.entries) {
    Json doc = Json::parse(store_.get(entry.address));
    for (const Json &hex : require_field(doc, "observations")) {
      auto addr = cas::ContentAddress::from_hex(hex.get<std::string>());
      if (!addr) throw CodecError("batch document holds a bad address");
      if (!seen.insert(addr->hex()).second) continue;
      out.push_back(observation_from_json(Json::parse(store_.get(*addr))));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CanonicalObservation &a, const CanonicalObservation &b) {
              if (a.effective_time != b.effective_time)
                return a.effective_time < b.effective_time;
              return observation_resource_id(a) < observation_resource_id(b);
            });
  return out;
}

Json FhirService::search_observations(const Params &params,
                                      const contracts::Principal &who) const {
  reject_unknown(params, {"patient", "code", "date", "_count", "_offset"});
  auto patient_param = take_one(params, "patient");
  if (!patient_param) throw SearchError("missing parameter: patient");
  auto code = take_one(params, "code");
  DateBound bound;
  std::string date_query;
  for (auto [lo, hi] = params.equal_range("date"); lo != hi; ++lo) {
    apply_date(bound, lo->second);
    date_query += "&date=" + lo->second;
  }
  Paging paging = parse_paging(params);

  PatientKey key = resolve_patient_param(*patient_param, who);
  require_read(who, key);

  std::vector<std::pair<std::string, Json>> matches;
  for (const auto &obs : observations_for(key)) {
    if (code && obs.code_binding != *code) continue;
    if (obs.effective_time < bound.ge || obs.effective_time > bound.le)
      continue;
    matches.emplace_back("Observation/" + observation_resource_id(obs),
                         to_fhir_observation(obs));
  }

  std::string query = "/fhir/Observation?patient=" + *patient_param;
  if (code) query += "&code=" + *code;
  query += date_query;
  return make_bundle(matches, paging, query);
}

Json FhirService::search_patients(const Params &params,
                                  const contracts::Principal &who) const {
  reject_unknown(params, {"identifier", "_count", "_offset"});
  auto identifier = take_one(params, "identifier");
  if (!identifier) throw SearchError("missing parameter: identifier");
  Paging paging = parse_paging(params);

  PatientKey key = resolve_patient_param(*identifier, who);
  require_read(who, key);
  const auto *rp = registration_.patient_by_key(key);

  std::vector<std::pair<std::string, Json>> matches;
  matches.emplace_back("Patient/" + patient_resource_id(key),
                       to_fhir_patient(rp->identity));
  return make_bundle(matches, paging,
                     "/fhir/Patient?identifier=" + *identifier);
}

Json FhirService::search_devices(const Params &params,
                                 const contracts::Principal &who) const {
  reject_unknown(params, {"patient", "_count", "_offset"});
  auto patient_param = take_one(params, "patient");
  if (!patient_param) throw SearchError("missing parameter: patient");
  Paging paging = parse_paging(params);

  PatientKey key = resolve_patient_param(*patient_param, who);
  require_read(who, key);
  const auto *rp = registration_.patient_by_key(key);

  std::vector<std::pair<std::string, Json>> matches;
  for (const auto &device : registration_.devices()) {
    if (device.patient_id != rp->patient_id) continue;
    auto tpl = templates_.find(device.template_id);
    if (!tpl) continue; // registered but not servable without its template
    DeviceIdentity identity{device.patient_id, device.device_id,
                            tpl->identifiers.nomenclature_code};
    matches.emplace_back("Device/" + device_resource_id(identity),
                         to_fhir_device(*tpl, identity));
  }
  std::sort(matches.begin(), matches.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });
  return make_bundle(matches, paging,
                     "/fhir/Device?patient=" + *patient_param);
}

} // namespace blockiot::fhir
