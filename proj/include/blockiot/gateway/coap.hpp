#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "blockiot/gateway/pipeline.hpp"

namespace blockiot::gateway {

// Wire-level CoAP message, the subset this gateway speaks: version 1,
// CON/NON/ACK/RST, token up to 8 bytes, options 11 (Uri-Path, repeatable),
// 12 (Content-Format) and 15 (Uri-Query), single datagram (no block-wise
// transfer).
struct CoapMessage {
  std::uint8_t type = 0; // 0 CON, 1 NON, 2 ACK, 3 RST
  std::uint8_t code = 0; // class << 5 | detail
  std::uint16_t message_id = 0;
  std::string token;
  std::vector<std::string> uri_path;
  std::vector<std::string> uri_query;
  std::optional<std::uint16_t> content_format;
  std::string payload;

  std::string encode() const;
};

// Returns false on anything outside the supported subset.
bool coap_decode(std::string_view datagram, CoapMessage &out);

constexpr std::uint8_t kCoapPost = 0x02;       // 0.02
constexpr std::uint8_t kCoapCreated = 0x41;    // 2.01
constexpr std::uint8_t kCoapBadRequest = 0x80; // 4.00
constexpr std::uint8_t kCoapUnauthorized = 0x81;
constexpr std::uint8_t kCoapForbidden = 0x83;
constexpr std::uint8_t kCoapNotFound = 0x84;
constexpr std::uint8_t kCoapTooLarge = 0x8d; // 4.13
constexpr std::uint8_t kCoapUnavailable = 0xa3;
constexpr std::uint16_t kContentFormatJson = 50;

// Device-facing CoAP endpoint. Batches arrive as confirmable POSTs to
// obs/<patient>/<device> with a Uri-Query of auth=<psk-id>; the receipt
// rides back in the piggybacked ACK. Responses to retransmitted message
// ids are replayed from a small cache without reprocessing.
class CoapServer {
public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;
  };

  CoapServer(Pipeline &pipeline, const Registration &registration,
             const std::atomic<bool> &ready, Options options);
  ~CoapServer();

  bool start(std::string *error = nullptr);
  void stop();
  int port() const { return port_; }

private:
  CoapMessage respond(const CoapMessage &request);

  Pipeline &pipeline_;
  const Registration &registration_;
  const std::atomic<bool> &ready_;
  Options options_;

  int fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread worker_;
};

// Confirmable request with retransmission. Used by the simulator and tests.
class CoapClient {
public:
  struct Response {
    std::uint8_t code = 0;
    std::string payload;
  };

  CoapClient(std::string host, int port, int ack_timeout_ms = 400,
             int max_retransmits = 4);
  ~CoapClient();

  // POST obs/<patient>/<device>?auth=<psk> with a JSON batch body.
  std::optional<Response> post_observations(const std::string &patient,
                                            const std::string &device,
                                            const std::string &psk_id,
                                            std::string_view body);
  std::optional<Response> request(CoapMessage message);

private:
  std::string host_;
  int port_;
  int ack_timeout_ms_;
  int max_retransmits_;
  int fd_ = -1;
  std::uint16_t next_message_id_ = 1;
  std::uint64_t next_token_ = 1;
};

} // namespace blockiot::gateway
