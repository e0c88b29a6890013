#include "siriette/coordinator/membership.hpp"

namespace siriette::coordinator {

std::string_view node_status_name(NodeStatus s) {
  switch (s) {
    case NodeStatus::kAlive: return "alive";
    case NodeStatus::kSuspect: return "suspect";
    case NodeStatus::kDead: return "dead";
  }
  return "?";
}

Membership::Membership(std::chrono::milliseconds timeout, std::function<Clock::time_point()> now)
    : timeout_(timeout), now_(std::move(now)) {
  if (timeout_.count() <= 0) raise(ErrorCode::kInvalidArgument, "heartbeat timeout must be positive");
}

void Membership::add(const NodeAddress& address) {
  auto t = now_();
  std::lock_guard lock(mu_);
  nodes_[address.id] = {address, t};
}

void Membership::beat(NodeId id) {
  auto t = now_();
  std::lock_guard lock(mu_);
  auto it = nodes_.find(id);
  if (it != nodes_.end()) it->second.last_beat = t;
}

bool Membership::known(NodeId id) const {
  std::lock_guard lock(mu_);
  return nodes_.contains(id);
}

NodeStatus Membership::status_locked(const Entry& e, Clock::time_point now) const {
  auto silent = now - e.last_beat;
  if (silent > timeout_) return NodeStatus::kDead;
  if (silent > timeout_ / 2) return NodeStatus::kSuspect;
  return NodeStatus::kAlive;
}

NodeStatus Membership::status(NodeId id) const {
  auto t = now_();
  std::lock_guard lock(mu_);
  auto it = nodes_.find(id);
  if (it == nodes_.end()) raise(ErrorCode::kUnknownEntry, "node " + std::to_string(id) + " is not a member");
  return status_locked(it->second, t);
}

std::vector<NodeId> Membership::alive() const {
  auto t = now_();
  std::lock_guard lock(mu_);
  std::vector<NodeId> out;
  for (const auto& [id, e] : nodes_) {
    if (status_locked(e, t) != NodeStatus::kDead) out.push_back(id);
  }
  return out;
}

std::vector<NodeId> Membership::all() const {
  std::lock_guard lock(mu_);
  std::vector<NodeId> out;
  for (const auto& [id, e] : nodes_) out.push_back(id);
  return out;
}

NodeAddress Membership::address(NodeId id) const {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(id);
  if (it == nodes_.end()) raise(ErrorCode::kUnknownEntry, "node " + std::to_string(id) + " is not a member");
  return it->second.address;
}

}  // namespace siriette::coordinator
