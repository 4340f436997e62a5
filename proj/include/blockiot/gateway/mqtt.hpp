#pragma once

#include <atomic>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <thread>

#include "blockiot/gateway/pipeline.hpp"

namespace blockiot::gateway {

// Device-facing MQTT 3.1.1 subset: CONNECT with username/password auth,
// SUBSCRIBE (exact topic filters), PUBLISH QoS 0/1, PINGREQ, DISCONNECT.
// Batches arrive on blockiot/<patient>/<device>/obs; the receipt is
// published on blockiot/<patient>/<device>/receipt. No wildcards, retained
// messages, wills, QoS 2, or session persistence.
class MqttBroker {
public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0; // 0 picks a free port
  };

  MqttBroker(Pipeline &pipeline, const Registration &registration,
             const std::atomic<bool> &ready, Options options);
  ~MqttBroker();

  bool start(std::string *error = nullptr);
  void stop();
  int port() const { return port_; }

private:
  struct Conn;
  void accept_loop();
  void serve(std::shared_ptr<Conn> conn);
  void handle_publish(Conn &conn, std::uint8_t flags, std::string_view body);
  void publish_to_subscribers(const std::string &topic,
                              std::string_view payload);

  Pipeline &pipeline_;
  const Registration &registration_;
  const std::atomic<bool> &ready_;
  Options options_;

  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::map<int, std::shared_ptr<Conn>> conns_;
  std::vector<std::thread> workers_;
};

// Small synchronous client used by the simulator and the tests.
class MqttClient {
public:
  struct Message {
    std::string topic;
    std::string payload;
  };

  ~MqttClient();

  // Returns the CONNACK return code (0 accepted), or -1 on socket failure.
  int connect(const std::string &host, int port, const std::string &username,
              const std::string &password, const std::string &client_id,
              int timeout_ms = 2000);
  bool subscribe(const std::string &topic);
  // QoS 1: waits for the PUBACK; inbound publishes seen while waiting are
  // queued for await_message.
  bool publish_qos1(const std::string &topic, std::string_view payload,
                    bool dup = false);
  std::optional<Message> await_message(int timeout_ms = 2000);
  void disconnect();
  bool connected() const { return fd_ >= 0; }

private:
  bool wait_for(std::uint8_t type, std::string *body);

  int fd_ = -1;
  std::uint16_t next_packet_id_ = 1;
  std::deque<Message> inbox_;
};

} // namespace blockiot::gateway
