#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "siriette/coordinator/protocol.hpp"

namespace siriette::coordinator {

using Clock = std::chrono::steady_clock;

enum class NodeStatus { kAlive, kSuspect, kDead };
std::string_view node_status_name(NodeStatus s);

// Heartbeat bookkeeping. A node is dead once more than `timeout` has passed
// since its last beat and suspect after half of that. Thread-safe.
class Membership {
 public:
  explicit Membership(std::chrono::milliseconds timeout, std::function<Clock::time_point()> now = Clock::now);

  // Registers or re-addresses a node; counts as a beat.
  void add(const NodeAddress& address);
  void beat(NodeId id);
  bool known(NodeId id) const;

  NodeStatus status(NodeId id) const;
  // Sorted ids of alive and suspect nodes.
  std::vector<NodeId> alive() const;
  std::vector<NodeId> all() const;
  NodeAddress address(NodeId id) const;
  std::chrono::milliseconds timeout() const { return timeout_; }

 private:
  struct Entry {
    NodeAddress address;
    Clock::time_point last_beat;
  };
  NodeStatus status_locked(const Entry& e, Clock::time_point now) const;

  std::chrono::milliseconds timeout_;
  std::function<Clock::time_point()> now_;
  mutable std::mutex mu_;
  std::map<NodeId, Entry> nodes_;
};

}  // namespace siriette::coordinator
