#include "blockiot/gateway/mqtt.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>

#include "blockiot/core/time.hpp"

namespace blockiot::gateway {

namespace {

constexpr std::uint8_t kConnect = 1;
constexpr std::uint8_t kConnack = 2;
constexpr std::uint8_t kPublish = 3;
constexpr std::uint8_t kPuback = 4;
constexpr std::uint8_t kSubscribe = 8;
constexpr std::uint8_t kSuback = 9;
constexpr std::uint8_t kPingreq = 12;
constexpr std::uint8_t kPingresp = 13;
constexpr std::uint8_t kDisconnect = 14;

bool read_exact(int fd, void *buf, std::size_t n) {
  auto *p = static_cast<std::uint8_t *>(buf);
  while (n > 0) {
    ssize_t got = ::recv(fd, p, n, 0);
    if (got == 0) return false;
    if (got < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

bool write_all(int fd, const void *buf, std::size_t n) {
  const auto *p = static_cast<const std::uint8_t *>(buf);
  while (n > 0) {
    ssize_t sent = ::send(fd, p, n, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += sent;
    n -= static_cast<std::size_t>(sent);
  }
  return true;
}

struct Packet {
  std::uint8_t type = 0;
  std::uint8_t flags = 0;
  std::string body;
};

// Fixed header: one type/flags byte, then remaining length as a varint of
// up to four 7-bit groups.
bool read_packet(int fd, Packet &out) {
  std::uint8_t first = 0;
  if (!read_exact(fd, &first, 1)) return false;
  std::size_t remaining = 0;
  std::size_t shift = 0;
  for (int i = 0; i < 4; ++i) {
    std::uint8_t b = 0;
    if (!read_exact(fd, &b, 1)) return false;
    remaining |= static_cast<std::size_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) break;
    if (i == 3) return false;
    shift += 7;
  }
  if (remaining > (32u << 20)) return false;
  out.type = first >> 4;
  out.flags = first & 0x0f;
  out.body.resize(remaining);
  return remaining == 0 || read_exact(fd, out.body.data(), remaining);
}

std::string encode_remaining(std::size_t n) {
  std::string out;
  do {
    std::uint8_t b = n & 0x7f;
    n >>= 7;
    if (n > 0) b |= 0x80;
    out.push_back(static_cast<char>(b));
  } while (n > 0);
  return out;
}

bool write_packet(int fd, std::uint8_t first, std::string_view body) {
  std::string frame;
  frame.reserve(body.size() + 5);
  frame.push_back(static_cast<char>(first));
  frame += encode_remaining(body.size());
  frame.append(body.data(), body.size());
  return write_all(fd, frame.data(), frame.size());
}

struct Cursor {
  std::string_view data;
  std::size_t pos = 0;
  bool fail = false;

  std::uint8_t u8() {
    if (pos + 1 > data.size()) {
      fail = true;
      return 0;
    }
    return static_cast<std::uint8_t>(data[pos++]);
  }
  std::uint16_t u16() {
    std::uint16_t hi = u8();
    std::uint16_t lo = u8();
    return fail ? 0 : static_cast<std::uint16_t>(hi << 8 | lo);
  }
  std::string str() {
    std::uint16_t n = u16();
    if (fail || pos + n > data.size()) {
      fail = true;
      return {};
    }
    std::string s(data.substr(pos, n));
    pos += n;
    return s;
  }
  std::string rest() {
    std::string s(data.substr(pos));
    pos = data.size();
    return s;
  }
};

void put_u16(std::string &out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_str(std::string &out, std::string_view s) {
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.append(s.data(), s.size());
}

std::string encode_publish_body(std::string_view topic,
                                std::string_view payload) {
  std::string body;
  put_str(body, topic);
  body.append(payload.data(), payload.size());
  return body;
}

// blockiot/<patient>/<device>/obs -> {patient, device}
bool split_obs_topic(const std::string &topic, std::string &patient,
                     std::string &device) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t slash = topic.find('/', start);
    if (slash == std::string::npos) {
      parts.push_back(topic.substr(start));
      break;
    }
    parts.push_back(topic.substr(start, slash - start));
    start = slash + 1;
  }
  if (parts.size() != 4 || parts[0] != "blockiot" || parts[3] != "obs")
    return false;
  if (parts[1].empty() || parts[2].empty()) return false;
  patient = parts[1];
  device = parts[2];
  return true;
}

int open_listener(const std::string &host, int port, int *bound_port,
                  std::string *error) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    if (error) *error = "socket: " + std::string(std::strerror(errno));
    return -1;
  }
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    if (error) *error = "bad listen address: " + host;
    ::close(fd);
    return -1;
  }
  if (::bind(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0 ||
      ::listen(fd, 64) < 0) {
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

int open_client(const std::string &host, int port, int timeout_ms) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
      ::connect(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0) {
    ::close(fd);
    return -1;
  }
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

} // namespace

struct MqttBroker::Conn {
  int fd = -1;
  std::mutex write_mu;
  const RegisteredDevice *device = nullptr;
  std::set<std::string> subs;
};

MqttBroker::MqttBroker(Pipeline &pipeline, const Registration &registration,
                       const std::atomic<bool> &ready, Options options)
    : pipeline_(pipeline),
      registration_(registration),
      ready_(ready),
      options_(std::move(options)) {}

MqttBroker::~MqttBroker() { stop(); }

bool MqttBroker::start(std::string *error) {
  if (running_.load()) return true;
  listen_fd_ = open_listener(options_.host, options_.port, &port_, error);
  if (listen_fd_ < 0) return false;
  running_.store(true);
  acceptor_ = std::thread([this] { accept_loop(); });
  return true;
}

void MqttBroker::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  {
    std::lock_guard lock(mu_);
    for (auto &[fd, conn] : conns_) ::shutdown(fd, SHUT_RDWR);
  }
  if (acceptor_.joinable()) acceptor_.join();
  for (auto &w : workers_)
    if (w.joinable()) w.join();
  workers_.clear();
  std::lock_guard lock(mu_);
  for (auto &[fd, conn] : conns_) ::close(fd);
  conns_.clear();
}

void MqttBroker::accept_loop() {
  while (running_.load()) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto conn = std::make_shared<Conn>();
    conn->fd = fd;
    {
      std::lock_guard lock(mu_);
      conns_[fd] = conn;
      workers_.emplace_back([this, conn] { serve(conn); });
    }
  }
}

void MqttBroker::serve(std::shared_ptr<Conn> conn) {
  Packet pkt;
  if (!read_packet(conn->fd, pkt) || pkt.type != kConnect) goto done;
  {
    Cursor c{pkt.body};
    std::string protocol = c.str();
    std::uint8_t level = c.u8();
    std::uint8_t flags = c.u8();
    c.u16(); // keep-alive; connections are closed on read failure instead
    std::string client_id = c.str();
    if ((flags & 0x04) != 0) { // will flag: parse and ignore
      c.str();
      c.str();
    }
    std::string username = (flags & 0x80) != 0 ? c.str() : std::string();
    std::string password = (flags & 0x40) != 0 ? c.str() : std::string();
    if (c.fail) goto done;

    std::uint8_t rc = 0;
    if (protocol != "MQTT" || level != 4) {
      rc = 1; // unacceptable protocol version
    } else if (!ready_.load()) {
      rc = 3; // server unavailable
    } else {
      try {
        conn->device = &registration_.auth_mqtt(username, password);
      } catch (const AuthError &) {
        rc = 4; // bad user name or password
      }
    }
    std::string connack;
    connack.push_back('\0'); // no session present
    connack.push_back(static_cast<char>(rc));
    {
      std::lock_guard wl(conn->write_mu);
      write_packet(conn->fd, kConnack << 4, connack);
    }
    if (rc != 0) goto done;
  }

  while (read_packet(conn->fd, pkt)) {
    switch (pkt.type) {
      case kPingreq: {
        std::lock_guard wl(conn->write_mu);
        write_packet(conn->fd, kPingresp << 4, {});
        break;
      }
      case kSubscribe: {
        Cursor c{pkt.body};
        std::uint16_t packet_id = c.u16();
        std::string ack;
        put_u16(ack, packet_id);
        std::vector<std::string> filters;
        while (!c.fail && c.pos < pkt.body.size()) {
          std::string filter = c.str();
          std::uint8_t qos = c.u8();
          if (c.fail) break;
          filters.push_back(std::move(filter));
          ack.push_back(static_cast<char>(qos > 1 ? 1 : qos));
        }
        if (c.fail || filters.empty()) goto done;
        {
          std::lock_guard lock(mu_);
          for (auto &f : filters) conn->subs.insert(f);
        }
        std::lock_guard wl(conn->write_mu);
        write_packet(conn->fd, kSuback << 4, ack);
        break;
      }
      case kPublish:
        handle_publish(*conn, pkt.flags, pkt.body);
        break;
      case kDisconnect:
        goto done;
      default:
        goto done; // QoS 2 flows and anything else are out of scope
    }
  }

done:
  std::lock_guard lock(mu_);
  auto it = conns_.find(conn->fd);
  if (it != conns_.end() && it->second == conn) {
    ::close(conn->fd);
    conns_.erase(it);
  }
}

void MqttBroker::handle_publish(Conn &conn, std::uint8_t flags,
                                std::string_view body) {
  std::uint8_t qos = (flags >> 1) & 0x03;
  Cursor c{body};
  std::string topic = c.str();
  std::uint16_t packet_id = qos > 0 ? c.u16() : 0;
  std::string payload = c.rest();
  if (c.fail || qos > 1) {
    ::shutdown(conn.fd, SHUT_RDWR);
    return;
  }

  std::string patient, device;
  std::string receipt_topic;
  Json reply;
  if (split_obs_topic(topic, patient, device)) {
    receipt_topic =
        "blockiot/" + patient + "/" + device + "/receipt";
    if (patient != conn.device->patient_id ||
        device != conn.device->device_id) {
      reply = Json{{"error", "authorization error"}};
    } else {
      try {
        auto payloads = Pipeline::parse_batch_body(payload);
        reply = pipeline_.ingest(*conn.device, payloads, now_utc_ms())
                    .to_json();
      } catch (const BusyError &e) {
        reply = Json{{"error", e.what()}, {"retryable", true}};
      } catch (const AuthorizationError &) {
        reply = Json{{"error", "authorization error"}};
      } catch (const RequestError &e) {
        reply = Json{{"error", e.what()}};
      } catch (const OversizeError &e) {
        reply = Json{{"error", e.what()}};
      }
    }
  }

  // Process before acknowledging so a lost PUBACK only ever causes a
  // redelivery that replays the stored receipt.
  if (qos == 1) {
    std::string ack;
    put_u16(ack, packet_id);
    std::lock_guard wl(conn.write_mu);
    write_packet(conn.fd, kPuback << 4, ack);
  }
  if (!receipt_topic.empty())
    publish_to_subscribers(receipt_topic, canonical_dump(reply));
}

void MqttBroker::publish_to_subscribers(const std::string &topic,
                                        std::string_view payload) {
  std::vector<std::shared_ptr<Conn>> targets;
  {
    std::lock_guard lock(mu_);
    for (auto &[fd, conn] : conns_)
      if (conn->subs.count(topic)) targets.push_back(conn);
  }
  std::string body = encode_publish_body(topic, payload);
  for (auto &conn : targets) {
    std::lock_guard wl(conn->write_mu);
    write_packet(conn->fd, kPublish << 4, body);
  }
}

MqttClient::~MqttClient() { disconnect(); }

int MqttClient::connect(const std::string &host, int port,
                        const std::string &username,
                        const std::string &password,
                        const std::string &client_id, int timeout_ms) {
  disconnect();
  fd_ = open_client(host, port, timeout_ms);
  if (fd_ < 0) return -1;
  std::string body;
  put_str(body, "MQTT");
  body.push_back(4); // protocol level
  body.push_back(static_cast<char>(0x80 | 0x40 | 0x02)); // user+pass+clean
  put_u16(body, 30); // keep-alive seconds
  put_str(body, client_id);
  put_str(body, username);
  put_str(body, password);
  if (!write_packet(fd_, kConnect << 4, body)) {
    disconnect();
    return -1;
  }
  std::string ack;
  if (!wait_for(kConnack, &ack) || ack.size() != 2) {
    disconnect();
    return -1;
  }
  int rc = static_cast<std::uint8_t>(ack[1]);
  if (rc != 0) disconnect();
  return rc;
}

bool MqttClient::subscribe(const std::string &topic) {
  if (fd_ < 0) return false;
  std::string body;
  put_u16(body, next_packet_id_++);
  put_str(body, topic);
  body.push_back(1); // requested QoS
  if (!write_packet(fd_, kSubscribe << 4 | 0x02, body)) return false;
  std::string ack;
  return wait_for(kSuback, &ack);
}

bool MqttClient::publish_qos1(const std::string &topic,
                              std::string_view payload, bool dup) {
  if (fd_ < 0) return false;
  std::string body;
  put_str(body, topic);
  put_u16(body, next_packet_id_++);
  body.append(payload.data(), payload.size());
  std::uint8_t first = kPublish << 4 | 0x02 | (dup ? 0x08 : 0);
  if (!write_packet(fd_, first, body)) return false;
  std::string ack;
  return wait_for(kPuback, &ack);
}

std::optional<MqttClient::Message> MqttClient::await_message(int timeout_ms) {
  if (!inbox_.empty()) {
    Message m = std::move(inbox_.front());
    inbox_.pop_front();
    return m;
  }
  if (fd_ < 0) return std::nullopt;
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  Packet pkt;
  while (read_packet(fd_, pkt)) {
    if (pkt.type != kPublish) continue; // stray acks
    Cursor c{pkt.body};
    Message m;
    m.topic = c.str();
    if (((pkt.flags >> 1) & 0x03) > 0) c.u16();
    m.payload = c.rest();
    if (!c.fail) return m;
  }
  return std::nullopt;
}

void MqttClient::disconnect() {
  if (fd_ < 0) return;
  write_packet(fd_, kDisconnect << 4, {});
  ::close(fd_);
  fd_ = -1;
  inbox_.clear();
}

bool MqttClient::wait_for(std::uint8_t type, std::string *body) {
  Packet pkt;
  while (read_packet(fd_, pkt)) {
    if (pkt.type == type) {
      *body = std::move(pkt.body);
      return true;
    }
    if (pkt.type == kPublish) {
      Cursor c{pkt.body};
      Message m;
      m.topic = c.str();
      if (((pkt.flags >> 1) & 0x03) > 0) c.u16();
      m.payload = c.rest();
      if (!c.fail) inbox_.push_back(std::move(m));
    }
  }
  return false;
}

} // namespace blockiot::gateway
