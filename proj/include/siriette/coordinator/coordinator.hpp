#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "siriette/coordinator/membership.hpp"
#include "siriette/coordinator/node.hpp"

namespace siriette::coordinator {

struct CoordinatorOptions {
  exchange::Millis heartbeat_interval{100};
  exchange::Millis heartbeat_timeout{2000};
  exchange::Millis dispatch_timeout{10000};
  exchange::Millis query_timeout{300000};
};

enum class FragmentStatus { kPending, kRunning, kDone, kFailed };
std::string_view fragment_status_name(FragmentStatus s);

struct TimingReport {
  int64_t total_ns = 0;
  int64_t compute_ns = 0;
  int64_t exchange_ns = 0;
  int64_t other_ns = 0;
  exec::ProfileReport detail;  // merged over every node
};

struct QueryExecution {
  uint64_t query_id = 0;
  plan::FragmentSet fragments;
  Placement placement;
  std::vector<NodeId> nodes;  // participants, sorted
  std::map<std::pair<int, NodeId>, FragmentStatus> status;
  bool fallback_used = false;
  std::optional<TimingReport> timing;  // set once terminal
  std::optional<std::pair<ErrorCode, std::string>> error;

  bool terminal() const;
  size_t instances() const { return status.size(); }
};

// Distributed control plane hosted on one data node (the local runtime).
// Membership, dispatch and collection run independently; calls for a single
// query are serialized by the caller.
class Coordinator {
 public:
  Coordinator(NodeRuntime& local, CoordinatorOptions options = {},
              std::function<Clock::time_point()> now = Clock::now);
  ~Coordinator();
  Coordinator(const Coordinator&) = delete;
  Coordinator& operator=(const Coordinator&) = delete;

  NodeId id() const { return local_.id(); }
  Membership& membership() { return membership_; }

  void add_node(const NodeAddress& address);
  void start_heartbeats();
  void stop();

  // Keeps the full table and spreads row ranges over the alive nodes. Slices
  // are redistributed when membership changes before the next dispatch.
  void load_table(const Table& table);
  bool has_table(const std::string& name) const;

  // NoAliveNodes, DispatchTimeout, or the first node's PREP error.
  QueryExecution dispatch(std::string_view plan_document);
  // Waits for every instance, then returns the gathered root output.
  // NodeLost when a participant dies; a failing fragment's error otherwise.
  Table collect(QueryExecution& e);
  Table run(std::string_view plan_document, QueryExecution* execution = nullptr);

  TimingReport timing_report(const QueryExecution& e) const;

  // One line per dispatch decision, for inspection.
  std::vector<std::string> dispatch_log() const;

 private:
  void reply_loop();
  void heartbeat_loop();
  void send(NodeId to, const ControlMessage& m);
  void ensure_slices(const std::vector<NodeId>& alive);
  void distribute(const std::vector<std::string>& tables, const std::vector<NodeId>& nodes);
  void cancel(QueryExecution& e, const std::vector<NodeId>& nodes);
  std::optional<ControlMessage> wait_reply(uint64_t query, exchange::Millis timeout);
  void log(std::string line);
  void finish(QueryExecution& e);
  std::optional<NodeId> wait_for_death(const std::set<NodeId>& candidates);

  NodeRuntime& local_;
  CoordinatorOptions options_;
  Membership membership_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Table> tables_;
  std::vector<NodeId> sliced_on_;
  std::set<NodeId> stale_;  // nodes reporting missing tables
  std::map<uint64_t, std::deque<ControlMessage>> inbox_;  // query -> replies
  std::deque<ControlMessage> load_replies_;
  std::map<uint64_t, std::unique_ptr<exec::Profiler>> profilers_;
  uint64_t next_query_ = 1;
  uint64_t heartbeat_seq_ = 0;
  uint64_t loaded_seq_ = 0;  // replies to earlier pings predate the last load
  std::vector<std::string> log_;

  std::atomic<bool> stopping_{false};
  std::thread reply_thread_;
  std::thread heartbeat_thread_;
};

// In-process cluster on a loopback hub. Node 0 hosts the coordinator.
class LocalCluster {
 public:
  explicit LocalCluster(size_t nodes, NodeOptions node_options = {}, CoordinatorOptions options = {});
  ~LocalCluster();

  size_t size() const { return nodes_.size(); }
  Coordinator& coordinator() { return *coordinator_; }
  NodeRuntime& node(NodeId id) { return *nodes_.at(id); }
  exchange::LoopbackHub& hub() { return *hub_; }

  // Cuts the node off the network; it stops answering heartbeats.
  void kill(NodeId id);
  // Replaces a killed node with a fresh runtime that announces itself with JOIN.
  void restart(NodeId id);

 private:
  NodeOptions node_options_;
  std::shared_ptr<exchange::LoopbackHub> hub_;
  std::vector<std::unique_ptr<NodeRuntime>> nodes_;
  std::unique_ptr<Coordinator> coordinator_;
};

}  // namespace siriette::coordinator
