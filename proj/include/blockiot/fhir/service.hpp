#pragma once

#include <map>
#include <stdexcept>

#include "blockiot/cas/names.hpp"
#include "blockiot/fhir/resources.hpp"
#include "blockiot/gateway/registration.hpp"
#include "blockiot/ledger/node.hpp"
#include "blockiot/templates/registry.hpp"

namespace blockiot::fhir {

// Bad or unsupported query: becomes a 400 OperationOutcome naming the
// offending parameter.
class SearchError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// FHIR search parameters: repeatable, order preserved for link rebuilding.
using Params = std::multimap<std::string, std::string>;

// Read-only search over the published record: names -> folder -> batch
// docs -> observations, joined with the registration table for Patient and
// Device resources and the replayed ledger state for access control.
class FhirService {
public:
  FhirService(const cas::Store &store, const cas::NameIndex &names,
              const gateway::Registration &registration,
              const templates::TemplateRegistry &templates,
              const ledger::Ledger &ledger);

  Json capability_statement() const;

  // Throws gateway::AuthorizationError when check_access denies the target
  // patient (or the patient is unknown, indistinguishably), SearchError on
  // bad parameters.
  Json search(std::string_view resource_type, const Params &params,
              const contracts::Principal &who) const;

  // Everything currently published for one patient, deduplicated by
  // content and sorted by (effective time, id). The service's own read
  // path, exposed for tests and the summarization trigger.
  std::vector<CanonicalObservation> observations_for(
      const PatientKey &patient) const;

private:
  Json search_observations(const Params &params,
                           const contracts::Principal &who) const;
  Json search_patients(const Params &params,
                       const contracts::Principal &who) const;
  Json search_devices(const Params &params,
                      const contracts::Principal &who) const;
  PatientKey resolve_patient_param(const std::string &value,
                                   const contracts::Principal &who) const;
  void require_read(const contracts::Principal &who,
                    const PatientKey &patient) const;

  const cas::Store &store_;
  const cas::NameIndex &names_;
  const gateway::Registration &registration_;
  const templates::TemplateRegistry &templates_;
  const ledger::Ledger &ledger_;
};

} // namespace blockiot::fhir
