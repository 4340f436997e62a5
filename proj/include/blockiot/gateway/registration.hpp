#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockiot/cas/keys.hpp"
#include "blockiot/contracts/access.hpp"
#include "blockiot/core/json.hpp"
#include "blockiot/ledger/tx.hpp"

namespace blockiot::gateway {

// Credential not recognized (401-class).
struct AuthError : std::runtime_error {
  explicit AuthError(const std::string &what) : std::runtime_error(what) {}
};

// Authenticated but outside the caller's scope (403-class).
struct AuthorizationError : std::runtime_error {
  explicit AuthorizationError(const std::string &what)
      : std::runtime_error(what) {}
};

struct RegistrationError : std::runtime_error {
  std::vector<std::string> paths;
  explicit RegistrationError(std::vector<std::string> p);
};

struct RegisteredPatient {
  std::string patient_id; // device-facing id, e.g. "P1"
  PatientIdentity identity;
  cas::Seed name_seed{}; // signs the patient's name records

  cas::KeyPair name_keys() const { return cas::KeyPair::from_seed(name_seed); }
};

struct RegisteredDevice {
  std::string device_id;
  std::string patient_id;
  std::string template_id; // "Manufacturer/Model"
  std::string http_token;
  std::string mqtt_username;
  std::string mqtt_password;
  std::string coap_psk_id;
};

// A human principal with read (and possibly grant) access: a clinician, or
// the patient's own login when patient_id is set.
struct RegisteredProvider {
  std::string id;
  std::string token;
  cas::Seed signing_seed{};
  std::optional<std::string> patient_id;

  cas::KeyPair keys() const { return cas::KeyPair::from_seed(signing_seed); }
};

// Static enrollment table; dynamic credential issuance is out of scope.
class Registration {
public:
  static Registration from_json(const Json &j); // throws RegistrationError
  static Registration load_file(const std::filesystem::path &p);

  const std::vector<RegisteredPatient> &patients() const { return patients_; }
  const std::vector<RegisteredDevice> &devices() const { return devices_; }
  const std::vector<RegisteredProvider> &providers() const {
    return providers_;
  }

  const RegisteredPatient *patient_by_id(std::string_view id) const;
  const RegisteredPatient *patient_by_key(const PatientKey &key) const;
  const RegisteredDevice *device_by_id(std::string_view id) const;

  // Authentication: credential -> registration. Throws AuthError.
  const RegisteredDevice &auth_http(std::string_view bearer_token) const;
  const RegisteredDevice &auth_mqtt(std::string_view username,
                                    std::string_view password) const;
  const RegisteredDevice &auth_coap(std::string_view psk_id) const;
  const RegisteredProvider &auth_provider(std::string_view token) const;

  // The patient a device is enrolled under (always present after load).
  const RegisteredPatient &patient_of(const RegisteredDevice &d) const;

  contracts::Principal principal_of(const RegisteredProvider &p) const;

  const std::string &gateway_signer() const { return gateway_signer_; }
  cas::KeyPair gateway_keys() const {
    return cas::KeyPair::from_seed(gateway_seed_);
  }

  // Signing keys the ledger validates against: the gateway and every
  // provider.
  ledger::KeyDirectory key_directory() const;

private:
  std::vector<RegisteredPatient> patients_;
  std::vector<RegisteredDevice> devices_;
  std::vector<RegisteredProvider> providers_;
  std::string gateway_signer_ = "gateway";
  cas::Seed gateway_seed_{};

  std::map<std::string, std::size_t, std::less<>> patient_ix_;
  std::map<std::string, std::size_t, std::less<>> patient_key_ix_;
  std::map<std::string, std::size_t, std::less<>> device_ix_;
  std::map<std::string, std::size_t, std::less<>> http_ix_;
  std::map<std::string, std::size_t, std::less<>> mqtt_ix_; // user "\n" pass
  std::map<std::string, std::size_t, std::less<>> coap_ix_;
  std::map<std::string, std::size_t, std::less<>> provider_ix_;
};

} // namespace blockiot::gateway
