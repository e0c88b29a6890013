#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace siriette::exchange {

using NodeId = uint16_t;
using Millis = std::chrono::milliseconds;

struct Message {
  NodeId from = 0;
  std::vector<uint8_t> bytes;
};

// Ordered, reliable, point-to-point message streams between named nodes.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual NodeId self() const = 0;
  // TransportError when the peer is unknown or unreachable.
  virtual void send(NodeId to, std::span<const uint8_t> bytes) = 0;
  // Next message for this node, or nullopt after `timeout` or once closed.
  virtual std::optional<Message> receive(Millis timeout) = 0;
  virtual void close() = 0;
};

// Thread-safe FIFO of received messages.
class Mailbox {
 public:
  void push(Message m);
  std::optional<Message> pop(Millis timeout);
  void close();
  bool closed() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> queue_;
  bool closed_ = false;
};

struct SendRecord {
  NodeId from = 0;
  NodeId to = 0;
  size_t bytes = 0;
  bool frame = false;
};

// In-process network. Endpoints deliver by pushing into each other's mailbox.
class LoopbackHub : public std::enable_shared_from_this<LoopbackHub> {
 public:
  static std::shared_ptr<LoopbackHub> create();

  std::shared_ptr<Transport> endpoint(NodeId id);
  // Later sends to or from `id` fail with TransportError until revive().
  void kill(NodeId id);
  void revive(NodeId id);
  bool alive(NodeId id) const;

  std::vector<SendRecord> log() const;
  void clear_log();

 private:
  friend class LoopbackTransport;
  LoopbackHub() = default;
  void deliver(NodeId from, NodeId to, std::span<const uint8_t> bytes);

  mutable std::mutex mu_;
  std::map<NodeId, std::shared_ptr<Mailbox>> boxes_;
  std::set<NodeId> dead_;
  std::vector<SendRecord> log_;
};

// Length-prefixed messages over TCP: u32 length, u16 sender, bytes.
class TcpTransport : public Transport {
 public:
  // Listens on host:port (port 0 picks an ephemeral port). BindError on failure.
  TcpTransport(NodeId self, const std::string& host = "127.0.0.1", uint16_t port = 0);
  ~TcpTransport() override;

  uint16_t port() const { return port_; }
  void add_peer(NodeId id, const std::string& host, uint16_t port);
  bool has_peer(NodeId id) const;

  NodeId self() const override { return self_; }
  void send(NodeId to, std::span<const uint8_t> bytes) override;
  std::optional<Message> receive(Millis timeout) override;
  void close() override;

 private:
  struct Peer {
    std::string host;
    uint16_t port = 0;
    int fd = -1;
    std::mutex mu;
  };
  void accept_loop();
  void read_loop(int fd);

  NodeId self_;
  uint16_t port_ = 0;
  int listen_fd_ = -1;
  Mailbox inbox_;
  mutable std::mutex mu_;
  std::map<NodeId, std::unique_ptr<Peer>> peers_;
  std::vector<int> accepted_;
  std::vector<std::thread> readers_;
  std::thread acceptor_;
  bool closed_ = false;
};

}  // namespace siriette::exchange
