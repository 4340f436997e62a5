#include "blockiot/gateway/coap.hpp"

#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <deque>
#include <map>

#include "blockiot/core/time.hpp"

namespace blockiot::gateway {

namespace {

constexpr std::uint8_t kOptUriPath = 11;
constexpr std::uint8_t kOptContentFormat = 12;
constexpr std::uint8_t kOptUriQuery = 15;
constexpr std::size_t kMaxDatagram = 60 * 1024;

void append_option(std::string &out, std::uint16_t &last,
                   std::uint16_t number, std::string_view value) {
  std::uint16_t delta = number - last;
  last = number;
  auto nibble = [](std::uint16_t v, std::string &ext) -> std::uint8_t {
    if (v < 13) return static_cast<std::uint8_t>(v);
    if (v < 269) {
      ext.push_back(static_cast<char>(v - 13));
      return 13;
    }
    ext.push_back(static_cast<char>((v - 269) >> 8));
    ext.push_back(static_cast<char>((v - 269) & 0xff));
    return 14;
  };
  std::string ext_delta, ext_len;
  std::uint8_t d = nibble(delta, ext_delta);
  std::uint8_t l = nibble(static_cast<std::uint16_t>(value.size()), ext_len);
  out.push_back(static_cast<char>(d << 4 | l));
  out += ext_delta;
  out += ext_len;
  out.append(value.data(), value.size());
}

struct OptionReader {
  std::string_view data;
  std::size_t pos = 0;
  std::uint16_t number = 0;
  bool fail = false;

  // Returns false at the payload marker or end of datagram.
  bool next(std::uint16_t &out_number, std::string_view &out_value) {
    if (pos >= data.size()) return false;
    std::uint8_t first = static_cast<std::uint8_t>(data[pos]);
    if (first == 0xff) {
      ++pos;
      return false;
    }
    ++pos;
    auto extend = [&](std::uint8_t nib) -> int {
      if (nib < 13) return nib;
      if (nib == 13) {
        if (pos >= data.size()) return -1;
        return 13 + static_cast<std::uint8_t>(data[pos++]);
      }
      if (nib == 14) {
        if (pos + 2 > data.size()) return -1;
        int hi = static_cast<std::uint8_t>(data[pos]);
        int lo = static_cast<std::uint8_t>(data[pos + 1]);
        pos += 2;
        return 269 + (hi << 8 | lo);
      }
      return -1; // 15 is reserved outside the payload marker
    };
    int delta = extend(first >> 4);
    int length = extend(first & 0x0f);
    if (delta < 0 || length < 0 || pos + length > data.size()) {
      fail = true;
      return false;
    }
    number = static_cast<std::uint16_t>(number + delta);
    out_number = number;
    out_value = data.substr(pos, static_cast<std::size_t>(length));
    pos += static_cast<std::size_t>(length);
    return true;
  }
};

int open_udp(const std::string &host, int port, int *bound_port,
             std::string *error) {
  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) {
    if (error) *error = "socket: " + std::string(std::strerror(errno));
    return -1;
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    if (error) *error = "bad listen address: " + host;
    ::close(fd);
    return -1;
  }
  if (::bind(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0) {
    if (error) *error = "bind: " + std::string(std::strerror(errno));
    ::close(fd);
    return -1;
  }
  sockaddr_in got{};
  socklen_t len = sizeof(got);
  if (::getsockname(fd, reinterpret_cast<sockaddr *>(&got), &len) == 0)
    *bound_port = ntohs(got.sin_port);
  return fd;
}

std::string endpoint_key(const sockaddr_in &addr) {
  char ip[INET_ADDRSTRLEN] = {0};
  ::inet_ntop(AF_INET, &addr.sin_addr, ip, sizeof(ip));
  return std::string(ip) + ":" + std::to_string(ntohs(addr.sin_port));
}

} // namespace

std::string CoapMessage::encode() const {
  std::string out;
  out.push_back(static_cast<char>(0x40 | (type & 0x03) << 4 |
                                  (token.size() & 0x0f)));
  out.push_back(static_cast<char>(code));
  out.push_back(static_cast<char>(message_id >> 8));
  out.push_back(static_cast<char>(message_id & 0xff));
  out += token;
  std::uint16_t last = 0;
  for (const auto &segment : uri_path)
    append_option(out, last, kOptUriPath, segment);
  if (content_format) {
    std::string value;
    if (*content_format > 0xff)
      value.push_back(static_cast<char>(*content_format >> 8));
    if (*content_format > 0)
      value.push_back(static_cast<char>(*content_format & 0xff));
    append_option(out, last, kOptContentFormat, value);
  }
  for (const auto &query : uri_query)
    append_option(out, last, kOptUriQuery, query);
  if (!payload.empty()) {
    out.push_back(static_cast<char>(0xff));
    out += payload;
  }
  return out;
}

bool coap_decode(std::string_view datagram, CoapMessage &out) {
  if (datagram.size() < 4) return false;
  std::uint8_t first = static_cast<std::uint8_t>(datagram[0]);
  if ((first >> 6) != 1) return false; // version
  std::uint8_t tkl = first & 0x0f;
  if (tkl > 8) return false;
  out.type = (first >> 4) & 0x03;
  out.code = static_cast<std::uint8_t>(datagram[1]);
  out.message_id = static_cast<std::uint16_t>(
      static_cast<std::uint8_t>(datagram[2]) << 8 |
      static_cast<std::uint8_t>(datagram[3]));
  if (datagram.size() < 4u + tkl) return false;
  out.token = std::string(datagram.substr(4, tkl));
  out.uri_path.clear();
  out.uri_query.clear();
  out.content_format.reset();
  out.payload.clear();

  OptionReader reader{datagram.substr(4 + tkl)};
  std::uint16_t number = 0;
  std::string_view value;
  while (reader.next(number, value)) {
    switch (number) {
      case kOptUriPath:
        out.uri_path.emplace_back(value);
        break;
      case kOptContentFormat: {
        if (value.size() > 2) return false;
        std::uint16_t cf = 0;
        for (char ch : value)
          cf = static_cast<std::uint16_t>(cf << 8 |
                                          static_cast<std::uint8_t>(ch));
        out.content_format = cf;
        break;
      }
      case kOptUriQuery:
        out.uri_query.emplace_back(value);
        break;
      default:
        // Critical options (odd numbers) outside the subset must reject.
        if (number & 1) return false;
        break;
    }
  }
  if (reader.fail) return false;
  out.payload = std::string(reader.data.substr(reader.pos));
  return true;
}

CoapServer::CoapServer(Pipeline &pipeline, const Registration &registration,
                       const std::atomic<bool> &ready, Options options)
    : pipeline_(pipeline),
      registration_(registration),
      ready_(ready),
      options_(std::move(options)) {}

CoapServer::~CoapServer() { stop(); }

bool CoapServer::start(std::string *error) {
  if (running_.load()) return true;
  fd_ = open_udp(options_.host, options_.port, &port_, error);
  if (fd_ < 0) return false;
  running_.store(true);
  worker_ = std::thread([this] {
    // Replay cache: (endpoint, message id) -> encoded response, bounded.
    std::map<std::pair<std::string, std::uint16_t>, std::string> cache;
    std::deque<std::pair<std::string, std::uint16_t>> cache_order;
    std::vector<char> buf(kMaxDatagram + 1);
    while (running_.load()) {
      pollfd pfd{fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, 200);
      if (rc <= 0) continue;
      sockaddr_in peer{};
      socklen_t peer_len = sizeof(peer);
      ssize_t got = ::recvfrom(fd_, buf.data(), buf.size(), 0,
                               reinterpret_cast<sockaddr *>(&peer),
                               &peer_len);
      if (got <= 0) continue;
      CoapMessage request;
      if (!coap_decode(std::string_view(buf.data(),
                                        static_cast<std::size_t>(got)),
                       request))
        continue;
      if (request.type == 2 || request.type == 3) continue; // stray ACK/RST
      std::string reply;
      if (request.type == 0 && request.code == 0) {
        // CoAP ping: empty confirmable message answers with a reset.
        CoapMessage rst;
        rst.type = 3;
        rst.message_id = request.message_id;
        reply = rst.encode();
      } else {
        auto key = std::make_pair(endpoint_key(peer), request.message_id);
        auto it = cache.find(key);
        if (it != cache.end()) {
          reply = it->second;
        } else {
          CoapMessage response = respond(request);
          response.type = request.type == 0 ? 2 : 1; // ACK or NON
          response.message_id = request.message_id;
          response.token = request.token;
          reply = response.encode();
          cache.emplace(key, reply);
          cache_order.push_back(key);
          if (cache_order.size() > 256) {
            cache.erase(cache_order.front());
            cache_order.pop_front();
          }
        }
      }
      ::sendto(fd_, reply.data(), reply.size(), 0,
               reinterpret_cast<sockaddr *>(&peer), peer_len);
    }
  });
  return true;
}

void CoapServer::stop() {
  if (!running_.exchange(false)) return;
  if (worker_.joinable()) worker_.join();
  ::close(fd_);
  fd_ = -1;
}

CoapMessage CoapServer::respond(const CoapMessage &request) {
  CoapMessage response;
  response.content_format = kContentFormatJson;
  auto fail = [&](std::uint8_t code, std::string_view message) {
    response.code = code;
    response.payload = canonical_dump(Json{{"error", message}});
    return response;
  };

  if (request.code != kCoapPost || request.uri_path.size() != 3 ||
      request.uri_path[0] != "obs")
    return fail(kCoapNotFound, "unknown resource");
  if (!ready_.load()) return fail(kCoapUnavailable, "starting");

  std::string psk_id;
  for (const auto &query : request.uri_query)
    if (query.rfind("auth=", 0) == 0) psk_id = query.substr(5);
  const RegisteredDevice *device = nullptr;
  try {
    device = &registration_.auth_coap(psk_id);
  } catch (const AuthError &) {
    return fail(kCoapUnauthorized, "identity error");
  }
  if (request.uri_path[1] != device->patient_id ||
      request.uri_path[2] != device->device_id)
    return fail(kCoapForbidden, "authorization error");

  try {
    auto payloads = Pipeline::parse_batch_body(request.payload);
    auto receipt = pipeline_.ingest(*device, payloads, now_utc_ms());
    response.code = kCoapCreated;
    response.payload = canonical_dump(receipt.to_json());
    return response;
  } catch (const BusyError &e) {
    return fail(kCoapUnavailable, e.what());
  } catch (const AuthorizationError &) {
    return fail(kCoapForbidden, "authorization error");
  } catch (const OversizeError &e) {
    return fail(kCoapTooLarge, e.what());
  } catch (const RequestError &e) {
    return fail(kCoapBadRequest, e.what());
  }
}

CoapClient::CoapClient(std::string host, int port, int ack_timeout_ms,
                       int max_retransmits)
    : host_(std::move(host)),
      port_(port),
      ack_timeout_ms_(ack_timeout_ms),
      max_retransmits_(max_retransmits) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) return;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port_));
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1 ||
      ::connect(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

CoapClient::~CoapClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<CoapClient::Response> CoapClient::post_observations(
    const std::string &patient, const std::string &device,
    const std::string &psk_id, std::string_view body) {
  CoapMessage message;
  message.type = 0; // CON
  message.code = kCoapPost;
  message.uri_path = {"obs", patient, device};
  message.uri_query = {"auth=" + psk_id};
  message.content_format = kContentFormatJson;
  message.payload = std::string(body);
  return request(std::move(message));
}

std::optional<CoapClient::Response> CoapClient::request(CoapMessage message) {
  if (fd_ < 0) return std::nullopt;
  message.message_id = next_message_id_++;
  std::uint64_t token_value = next_token_++;
  message.token.assign(8, '\0');
  for (int i = 0; i < 8; ++i)
    message.token[static_cast<std::size_t>(i)] =
        static_cast<char>(token_value >> (56 - 8 * i));
  std::string datagram = message.encode();
  if (datagram.size() > kMaxDatagram) return std::nullopt;

  int timeout = ack_timeout_ms_;
  std::vector<char> buf(kMaxDatagram + 1);
  for (int attempt = 0; attempt <= max_retransmits_; ++attempt) {
    if (::send(fd_, datagram.data(), datagram.size(), 0) < 0)
      return std::nullopt;
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(timeout);
    while (true) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                      deadline - std::chrono::steady_clock::now())
                      .count();
      if (left <= 0) break;
      pollfd pfd{fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(left));
      if (rc <= 0) break;
      ssize_t got = ::recv(fd_, buf.data(), buf.size(), 0);
      if (got <= 0) continue;
      CoapMessage reply;
      if (!coap_decode(std::string_view(buf.data(),
                                        static_cast<std::size_t>(got)),
                       reply))
        continue;
      if (reply.message_id != message.message_id) continue;
      if (reply.type == 3) return std::nullopt; // reset
      if (reply.token != message.token) continue;
      return Response{reply.code, std::move(reply.payload)};
    }
    timeout *= 2;
  }
  return std::nullopt;
}

} // namespace blockiot::gateway
