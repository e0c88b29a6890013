#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "siriette/coordinator/placement.hpp"
#include "siriette/coordinator/protocol.hpp"
#include "siriette/engine/engine.hpp"
#include "siriette/exchange/exchange.hpp"

namespace siriette::coordinator {

struct NodeOptions {
  engine::EngineConfig engine;
  exchange::ExchangeOptions exchange;
  exchange::Millis receive_timeout{60000};
  engine::EngineMode mode = engine::EngineMode::kAuto;
};

// One data node: an engine over the node's table slices, an exchange service
// on the node transport, and a dispatcher answering control requests.
class NodeRuntime {
 public:
  NodeRuntime(std::shared_ptr<exchange::Transport> transport, NodeOptions options = {});
  ~NodeRuntime();
  NodeRuntime(const NodeRuntime&) = delete;
  NodeRuntime& operator=(const NodeRuntime&) = delete;

  NodeId id() const { return exchange_->self(); }
  engine::Engine& engine() { return *engine_; }
  exchange::ExchangeService& exchange() { return *exchange_; }

  void send(NodeId to, const ControlMessage& m);
  // Non-request messages (acks, completions, heartbeat replies, joins) in
  // arrival order.
  std::optional<ControlMessage> next_reply(exchange::Millis timeout);

  std::vector<std::string> tables() const;

  // Time of the last request received from any peer.
  std::chrono::steady_clock::time_point last_contact() const {
    return std::chrono::steady_clock::time_point(std::chrono::steady_clock::duration(last_contact_.load()));
  }

  // Holds every query this long after START, to simulate a slow node.
  void set_start_delay(exchange::Millis delay) { start_delay_ = delay; }

  // Stops the dispatcher, aborts running queries and closes the transport.
  void stop();

 private:
  struct Query {
    uint64_t id = 0;
    plan::PhysicalPlan plan;
    plan::FragmentSet fragments;
    Placement placement;
    NodeId coordinator = 0;
    std::atomic<bool> cancelled{false};
    std::atomic<bool> finished{false};
    std::thread worker;
  };

  void dispatch_loop();
  void handle(const exchange::Message& raw);
  void prepare(const ControlMessage& m);
  void start(uint64_t query);
  void execute(Query& q);
  void reap();

  NodeOptions options_;
  std::unique_ptr<engine::Engine> engine_;
  std::unique_ptr<exchange::ExchangeService> exchange_;
  std::shared_ptr<exchange::Transport> transport_;
  exchange::Mailbox replies_;

  std::mutex engine_mu_;
  mutable std::mutex mu_;
  std::map<uint64_t, std::unique_ptr<Query>> queries_;
  std::vector<std::string> tables_;

  std::atomic<exchange::Millis> start_delay_{exchange::Millis(0)};
  std::atomic<std::chrono::steady_clock::rep> last_contact_{0};
  std::atomic<bool> stopping_{false};
  std::thread dispatcher_;
};

}  // namespace siriette::coordinator
