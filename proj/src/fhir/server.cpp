#include "blockiot/fhir/server.hpp"

#include <httplib.h>

namespace blockiot::fhir {

namespace {

constexpr const char *kFhirJson = "application/fhir+json";

Json operation_outcome(const std::string &diagnostics) {
  return Json{{"resourceType", "OperationOutcome"},
              {"issue",
               Json::array({Json{{"severity", "error"},
                                 {"code", "processing"},
                                 {"diagnostics", diagnostics}}})}};
}

void handle_search(const FhirService &service,
                   const gateway::Registration &registration,
                   const std::atomic<bool> &ready, const char *resource_type,
                   const httplib::Request &req, httplib::Response &res) {
  if (!ready.load()) {
    res.status = 503;
    return;
  }
  std::string auth = req.get_header_value("Authorization");
  if (auth.rfind("Bearer ", 0) != 0) {
    res.status = 401;
    return;
  }
  contracts::Principal who;
  try {
    who = registration.principal_of(
        registration.auth_provider(auth.substr(7)));
  } catch (const gateway::AuthError &) {
    res.status = 401;
    return;
  }
  try {
    Params params(req.params.begin(), req.params.end());
    Json bundle = service.search(resource_type, params, who);
    res.status = 200;
    res.set_content(canonical_dump(bundle), kFhirJson);
  } catch (const gateway::AuthorizationError &) {
    res.status = 403; // empty body: no leakage about why
  } catch (const SearchError &e) {
    res.status = 400;
    res.set_content(canonical_dump(operation_outcome(e.what())), kFhirJson);
  }
}

} // namespace

void mount_fhir(httplib::Server &server, const FhirService &service,
                const gateway::Registration &registration,
                const std::atomic<bool> &ready) {
  server.Get("/fhir/metadata", [&service, &ready](const httplib::Request &,
                                                  httplib::Response &res) {
    if (!ready.load()) {
      res.status = 503;
      return;
    }
    res.status = 200;
    res.set_content(canonical_dump(service.capability_statement()),
                    kFhirJson);
  });
  for (const char *type : {"Observation", "Patient", "Device"}) {
    server.Get(std::string("/fhir/") + type,
               [&service, &registration, &ready, type](
                   const httplib::Request &req, httplib::Response &res) {
                 handle_search(service, registration, ready, type, req, res);
               });
  }
}

} // namespace blockiot::fhir
