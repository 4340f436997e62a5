#include "blockiot/gateway/registration.hpp"

#include <fstream>
#include <sstream>

#include "blockiot/core/hex.hpp"

namespace blockiot::gateway {

namespace {

std::string join_paths(const std::vector<std::string> &paths) {
  std::string out = "registration invalid:";
  for (const auto &p : paths) {
    out += "\n  ";
    out += p;
  }
  return out;
}

// Collects every problem before failing so one load reports all of them.
struct Errors {
  std::vector<std::string> paths;
  void add(std::string path, std::string why) {
    paths.push_back(std::move(path) + ": " + std::move(why));
  }
  void raise_if_any() {
    if (!paths.empty()) throw RegistrationError(std::move(paths));
  }
};

bool parse_seed(const Json &j, const char *key, cas::Seed &out) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return false;
  auto bytes = from_hex(it->get<std::string>());
  if (!bytes || bytes->size() != out.size()) return false;
  std::copy(bytes->begin(), bytes->end(), out.begin());
  return true;
}

std::string opt_string(const Json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return "";
  return it->get<std::string>();
}

} // namespace

RegistrationError::RegistrationError(std::vector<std::string> p)
    : std::runtime_error(join_paths(p)), paths(std::move(p)) {}

Registration Registration::from_json(const Json &j) {
  Errors errors;
  Registration r;
  if (!j.is_object()) {
    errors.add("$", "document must be an object");
    errors.raise_if_any();
  }

  if (auto gw = j.find("gateway"); gw != j.end() && gw->is_object()) {
    std::string signer = opt_string(*gw, "signer");
    if (!signer.empty()) r.gateway_signer_ = signer;
    if (!parse_seed(*gw, "seed", r.gateway_seed_))
      errors.add("gateway.seed", "must be 64 hex characters");
  } else {
    errors.add("gateway", "section missing");
  }

  const Json empty_array = Json::array();
  auto section = [&](const char *name) -> const Json & {
    auto it = j.find(name);
    if (it == j.end()) return empty_array;
    if (!it->is_array()) {
      errors.add(name, "must be an array");
      return empty_array;
    }
    return *it;
  };

  const Json &patients = section("patients");
  for (std::size_t i = 0; i < patients.size(); ++i) {
    std::string at = "patients[" + std::to_string(i) + "]";
    const Json &p = patients[i];
    if (!p.is_object()) {
      errors.add(at, "must be an object");
      continue;
    }
    RegisteredPatient rp;
    rp.patient_id = opt_string(p, "patient_id");
    if (rp.patient_id.empty()) errors.add(at + ".patient_id", "required");
    auto dob = parse_date(opt_string(p, "date_of_birth"));
    if (!dob) {
      errors.add(at + ".date_of_birth", "must be YYYY-MM-DD");
      continue;
    }
    try {
      rp.identity = make_patient_identity(opt_string(p, "first_name"),
                                          opt_string(p, "last_name"), *dob);
    } catch (const std::invalid_argument &e) {
      errors.add(at, e.what());
      continue;
    }
    if (!parse_seed(p, "name_seed", rp.name_seed))
      errors.add(at + ".name_seed", "must be 64 hex characters");
    if (!rp.patient_id.empty() &&
        !r.patient_ix_.emplace(rp.patient_id, r.patients_.size()).second) {
      errors.add(at + ".patient_id", "duplicate id " + rp.patient_id);
      continue;
    }
    r.patient_key_ix_.emplace(digest_hex(rp.identity.patient_key),
                              r.patients_.size());
    r.patients_.push_back(std::move(rp));
  }

  const Json &devices = section("devices");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    std::string at = "devices[" + std::to_string(i) + "]";
    const Json &d = devices[i];
    if (!d.is_object()) {
      errors.add(at, "must be an object");
      continue;
    }
    RegisteredDevice rd;
    rd.device_id = opt_string(d, "device_id");
    rd.patient_id = opt_string(d, "patient_id");
    rd.template_id = opt_string(d, "template");
    if (rd.device_id.empty()) errors.add(at + ".device_id", "required");
    if (rd.template_id.empty()) errors.add(at + ".template", "required");
    if (!r.patient_ix_.count(rd.patient_id))
      errors.add(at + ".patient_id", "unknown patient " + rd.patient_id);
    if (auto cred = d.find("credentials");
        cred != d.end() && cred->is_object()) {
      rd.http_token = opt_string(*cred, "http_token");
      rd.mqtt_username = opt_string(*cred, "mqtt_username");
      rd.mqtt_password = opt_string(*cred, "mqtt_password");
      rd.coap_psk_id = opt_string(*cred, "coap_psk_id");
    } else {
      errors.add(at + ".credentials", "section missing");
    }
    std::size_t ix = r.devices_.size();
    if (!rd.device_id.empty() &&
        !r.device_ix_.emplace(rd.device_id, ix).second) {
      errors.add(at + ".device_id", "duplicate id " + rd.device_id);
      continue;
    }
    if (!rd.http_token.empty() &&
        !r.http_ix_.emplace(rd.http_token, ix).second)
      errors.add(at + ".credentials.http_token", "token reused");
    if (!rd.mqtt_username.empty() &&
        !r.mqtt_ix_.emplace(rd.mqtt_username + "\n" + rd.mqtt_password, ix)
             .second)
      errors.add(at + ".credentials.mqtt_username", "credentials reused");
    if (!rd.coap_psk_id.empty() &&
        !r.coap_ix_.emplace(rd.coap_psk_id, ix).second)
      errors.add(at + ".credentials.coap_psk_id", "key id reused");
    r.devices_.push_back(std::move(rd));
  }

  const Json &providers = section("providers");
  for (std::size_t i = 0; i < providers.size(); ++i) {
    std::string at = "providers[" + std::to_string(i) + "]";
    const Json &p = providers[i];
    if (!p.is_object()) {
      errors.add(at, "must be an object");
      continue;
    }
    RegisteredProvider rp;
    rp.id = opt_string(p, "id");
    rp.token = opt_string(p, "token");
    if (rp.id.empty()) errors.add(at + ".id", "required");
    if (rp.token.empty()) errors.add(at + ".token", "required");
    if (!parse_seed(p, "seed", rp.signing_seed))
      errors.add(at + ".seed", "must be 64 hex characters");
    if (auto pid = p.find("patient_id"); pid != p.end()) {
      if (!pid->is_string() || !r.patient_ix_.count(pid->get<std::string>()))
        errors.add(at + ".patient_id", "unknown patient");
      else
        rp.patient_id = pid->get<std::string>();
    }
    std::size_t ix = r.providers_.size();
    if (rp.id == r.gateway_signer_)
      errors.add(at + ".id", "collides with the gateway signer");
    if (!rp.token.empty() && !r.provider_ix_.emplace(rp.token, ix).second)
      errors.add(at + ".token", "token reused");
    for (const auto &other : r.providers_)
      if (other.id == rp.id) errors.add(at + ".id", "duplicate id " + rp.id);
    r.providers_.push_back(std::move(rp));
  }

  errors.raise_if_any();
  return r;
}

Registration Registration::load_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw RegistrationError({p.string() + ": cannot open"});
  std::ostringstream buf;
  buf << in.rdbuf();
  Json j = Json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw RegistrationError({p.string() + ": not JSON"});
  return from_json(j);
}

const RegisteredPatient *Registration::patient_by_id(
    std::string_view id) const {
  auto it = patient_ix_.find(id);
  return it == patient_ix_.end() ? nullptr : &patients_[it->second];
}

const RegisteredPatient *Registration::patient_by_key(
    const PatientKey &key) const {
  auto it = patient_key_ix_.find(digest_hex(key));
  return it == patient_key_ix_.end() ? nullptr : &patients_[it->second];
}

const RegisteredDevice *Registration::device_by_id(std::string_view id) const {
  auto it = device_ix_.find(id);
  return it == device_ix_.end() ? nullptr : &devices_[it->second];
}

const RegisteredDevice &Registration::auth_http(
    std::string_view bearer_token) const {
  auto it = http_ix_.find(bearer_token);
  if (it == http_ix_.end()) throw AuthError("unknown bearer token");
  return devices_[it->second];
}

const RegisteredDevice &Registration::auth_mqtt(
    std::string_view username, std::string_view password) const {
  auto it = mqtt_ix_.find(std::string(username) + "\n" +
                          std::string(password));
  if (it == mqtt_ix_.end()) throw AuthError("unknown mqtt credentials");
  return devices_[it->second];
}

const RegisteredDevice &Registration::auth_coap(
    std::string_view psk_id) const {
  auto it = coap_ix_.find(psk_id);
  if (it == coap_ix_.end()) throw AuthError("unknown pre-shared key id");
  return devices_[it->second];
}

const RegisteredProvider &Registration::auth_provider(
    std::string_view token) const {
  auto it = provider_ix_.find(token);
  if (it == provider_ix_.end()) throw AuthError("unknown provider token");
  return providers_[it->second];
}

const RegisteredPatient &Registration::patient_of(
    const RegisteredDevice &d) const {
  const RegisteredPatient *p = patient_by_id(d.patient_id);
  if (!p) throw AuthError("device enrolled under unknown patient");
  return *p;
}

contracts::Principal Registration::principal_of(
    const RegisteredProvider &p) const {
  contracts::Principal who{p.id, std::nullopt};
  if (p.patient_id)
    if (const RegisteredPatient *pat = patient_by_id(*p.patient_id))
      who.own_patient = pat->identity.patient_key;
  return who;
}

ledger::KeyDirectory Registration::key_directory() const {
  ledger::KeyDirectory d;
  d.put(gateway_signer_, gateway_keys().public_key);
  for (const auto &p : providers_) d.put(p.id, p.keys().public_key);
  return d;
}

} // namespace blockiot::gateway
