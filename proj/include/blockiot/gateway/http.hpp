#pragma once

#include <atomic>

#include "blockiot/gateway/pipeline.hpp"

namespace httplib {
class Server;
}

namespace blockiot::gateway {

// Wires the ingest endpoints onto an HTTP server owned by the caller:
//   POST /ingest/observations  (bearer-token device auth, JSON batch)
//   GET  /healthz
// ready gates traffic: requests are rejected 503 until it turns true.
void mount_ingest(httplib::Server &server, Pipeline &pipeline,
                  const Registration &registration,
                  const std::atomic<bool> &ready);

} // namespace blockiot::gateway
