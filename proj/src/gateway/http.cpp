#include "blockiot/gateway/http.hpp"

#include <httplib.h>

#include "blockiot/core/time.hpp"

namespace blockiot::gateway {

namespace {

void reply_json(httplib::Response &res, int status, const Json &body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

void reply_error(httplib::Response &res, int status, const std::string &msg) {
  reply_json(res, status, Json{{"error", msg}});
}

} // namespace

void mount_ingest(httplib::Server &server, Pipeline &pipeline,
                  const Registration &registration,
                  const std::atomic<bool> &ready) {
  server.Get("/healthz", [&ready](const httplib::Request &,
                                  httplib::Response &res) {
    if (ready.load())
      reply_json(res, 200, Json{{"status", "ok"}});
    else
      reply_json(res, 503, Json{{"status", "starting"}});
  });

  server.Post("/ingest/observations", [&pipeline, &registration, &ready](
                                          const httplib::Request &req,
                                          httplib::Response &res) {
    if (!ready.load()) {
      reply_error(res, 503, "starting");
      return;
    }
    std::string auth = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (auth.rfind(kBearer, 0) != 0) {
      reply_error(res, 401, "bearer token required");
      return;
    }
    if (req.body.size() > pipeline.config().max_batch_bytes) {
      reply_error(res, 413, "batch too large");
      return;
    }
    try {
      const RegisteredDevice &device =
          registration.auth_http(auth.substr(kBearer.size()));
      auto payloads = Pipeline::parse_batch_body(req.body);
      auto receipt = pipeline.ingest(device, payloads, now_utc_ms());
      reply_json(res, 200, receipt.to_json());
    } catch (const AuthError &e) {
      reply_error(res, 401, e.what());
    } catch (const AuthorizationError &e) {
      reply_error(res, 403, e.what());
    } catch (const RequestError &e) {
      reply_error(res, 400, e.what());
    } catch (const OversizeError &e) {
      reply_error(res, 413, e.what());
    } catch (const BusyError &e) {
      res.set_header("Retry-After", "1");
      reply_error(res, 503, e.what());
    }
  });
}

} // namespace blockiot::gateway
