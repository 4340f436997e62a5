#pragma once

#include <atomic>

#include "blockiot/fhir/service.hpp"

namespace httplib {
class Server;
}

namespace blockiot::fhir {

// GET /fhir/metadata and GET /fhir/{Observation,Patient,Device}. Bearer
// tokens name provider principals from the registration table. Denials are
// deliberately empty-bodied: 401 for unknown tokens, 403 when access
// control refuses, with no resource or roster leakage either way.
void mount_fhir(httplib::Server &server, const FhirService &service,
                const gateway::Registration &registration,
                const std::atomic<bool> &ready);

} // namespace blockiot::fhir
