#include "siriette/coordinator/coordinator.hpp"

#include <algorithm>
#include <sstream>

#include "siriette/common/log.hpp"
#include "siriette/plan/document.hpp"
#include "siriette/plan/validate.hpp"

namespace siriette::coordinator {

namespace {

std::string join_ids(const std::vector<NodeId>& ids) {
  std::ostringstream out;
  out << '[';
  for (size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
  out << ']';
  return out.str();
}

}  // namespace

std::string_view fragment_status_name(FragmentStatus s) {
  switch (s) {
    case FragmentStatus::kPending: return "pending";
    case FragmentStatus::kRunning: return "running";
    case FragmentStatus::kDone: return "done";
    case FragmentStatus::kFailed: return "failed";
  }
  return "?";
}

bool QueryExecution::terminal() const {
  if (error) return true;
  return std::all_of(status.begin(), status.end(), [](const auto& kv) { return kv.second == FragmentStatus::kDone; });
}

Coordinator::Coordinator(NodeRuntime& local, CoordinatorOptions options, std::function<Clock::time_point()> now)
    : local_(local), options_(options), membership_(options.heartbeat_timeout, std::move(now)) {
  if (options_.heartbeat_interval >= options_.heartbeat_timeout) {
    raise(ErrorCode::kInvalidArgument, "heartbeat interval must be shorter than the timeout");
  }
  membership_.add({local_.id(), "", 0});
  // Ids stay unique across coordinator restarts that reuse the same nodes.
  next_query_ = static_cast<uint64_t>(std::chrono::system_clock::now().time_since_epoch().count()) & ((1ull << 53) - 1);
  reply_thread_ = std::thread([this] { reply_loop(); });
}

Coordinator::~Coordinator() { stop(); }

void Coordinator::stop() {
  if (stopping_.exchange(true)) return;
  cv_.notify_all();
  if (heartbeat_thread_.joinable()) heartbeat_thread_.join();
  if (reply_thread_.joinable()) reply_thread_.join();
}

void Coordinator::add_node(const NodeAddress& address) {
  membership_.add(address);
  if (auto* tcp = dynamic_cast<exchange::TcpTransport*>(&local_.exchange().transport())) {
    if (address.id != id() && !address.host.empty()) tcp->add_peer(address.id, address.host, address.port);
  }
  std::lock_guard lock(mu_);
  stale_.insert(address.id);
}

void Coordinator::start_heartbeats() {
  if (heartbeat_thread_.joinable()) return;
  heartbeat_thread_ = std::thread([this] { heartbeat_loop(); });
}

void Coordinator::log(std::string line) {
  spdlog::debug("coordinator: {}", line);
  std::lock_guard lock(mu_);
  log_.push_back(std::move(line));
}

std::vector<std::string> Coordinator::dispatch_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void Coordinator::send(NodeId to, const ControlMessage& m) { local_.send(to, m); }

void Coordinator::heartbeat_loop() {
  while (!stopping_) {
    membership_.beat(id());
    ControlMessage ping;
    ping.type = MessageType::kStatus;
    ping.node = id();
    {
      std::lock_guard lock(mu_);
      ping.sequence = ++heartbeat_seq_;
    }
    for (NodeId n : membership_.all()) {
      if (n == id()) continue;
      try {
        send(n, ping);
      } catch (const Error& e) {
        spdlog::trace("heartbeat to node {} failed: {}", n, e.what());
      }
    }
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, options_.heartbeat_interval, [this] { return stopping_.load(); });
  }
}

void Coordinator::reply_loop() {
  while (!stopping_) {
    std::optional<ControlMessage> m;
    try {
      m = local_.next_reply(exchange::Millis(50));
    } catch (const Error& e) {
      spdlog::warn("coordinator: dropped malformed reply: {}", e.what());
      continue;
    }
    if (!m) continue;
    if (m->type == MessageType::kJoin) {
      log("node " + std::to_string(m->join->id) + " joined");
      add_node(*m->join);
      continue;
    }
    membership_.beat(m->node);
    std::lock_guard lock(mu_);
    switch (m->type) {
      case MessageType::kStatusReply:
        if (m->sequence <= loaded_seq_) break;
        for (const auto& [name, t] : tables_) {
          const auto& have = m->status->tables;
          if (std::find(have.begin(), have.end(), name) == have.end()) stale_.insert(m->node);
        }
        break;
      case MessageType::kAck:
      case MessageType::kError:
        if (m->ref == message_type_name(MessageType::kLoad)) {
          load_replies_.push_back(std::move(*m));
        } else if (auto it = inbox_.find(m->query); it != inbox_.end()) {
          it->second.push_back(std::move(*m));
        }
        break;
      case MessageType::kDone:
        if (auto it = inbox_.find(m->query); it != inbox_.end()) it->second.push_back(std::move(*m));
        break;
      default:
        break;
    }
    cv_.notify_all();
  }
}

std::optional<ControlMessage> Coordinator::wait_reply(uint64_t query, exchange::Millis timeout) {
  std::unique_lock lock(mu_);
  auto& q = inbox_[query];
  if (!cv_.wait_for(lock, timeout, [&] { return !q.empty() || stopping_; })) return std::nullopt;
  if (q.empty()) return std::nullopt;
  auto m = std::move(q.front());
  q.pop_front();
  return m;
}

void Coordinator::distribute(const std::vector<std::string>& tables, const std::vector<NodeId>& nodes) {
  {
    std::lock_guard lock(mu_);
    load_replies_.clear();
  }
  size_t expected = 0;
  for (const auto& name : tables) {
    Batch all;
    Schema schema;
    {
      std::lock_guard lock(mu_);
      const auto& t = tables_.at(name);
      all = t.combined();
      schema = t.schema();
    }
    size_t n = all.num_rows();
    for (size_t i = 0; i < nodes.size(); ++i) {
      size_t lo = n * i / nodes.size();
      size_t hi = n * (i + 1) / nodes.size();
      ControlMessage m;
      m.type = MessageType::kLoad;
      m.node = id();
      m.load = LoadMessage{name, schema, slice(all, lo, hi - lo), true};
      try {
        send(nodes[i], m);
      } catch (const Error& e) {
        raise(ErrorCode::kDispatchTimeout, "cannot load '" + name + "' on node " + std::to_string(nodes[i]) + ": " +
                                               bare_message(e));
      }
      ++expected;
    }
  }
  auto deadline = Clock::now() + options_.dispatch_timeout;
  std::unique_lock lock(mu_);
  size_t acked = 0;
  while (acked < expected) {
    if (!cv_.wait_until(lock, deadline, [&] { return !load_replies_.empty() || stopping_; })) {
      raise(ErrorCode::kDispatchTimeout, "table load not acknowledged by every node");
    }
    if (stopping_) raise(ErrorCode::kCancelled, "coordinator stopping");
    auto r = std::move(load_replies_.front());
    load_replies_.pop_front();
    if (r.type == MessageType::kError) {
      raise(r.code.value_or(ErrorCode::kInternal), "node " + std::to_string(r.node) + ": " + r.message);
    }
    ++acked;
  }
  loaded_seq_ = heartbeat_seq_;
}

void Coordinator::load_table(const Table& table) {
  bool in_place = false;
  {
    std::lock_guard lock(mu_);
    if (tables_.contains(table.name())) {
      raise(ErrorCode::kInvalidArgument, "table '" + table.name() + "' is already loaded");
    }
    tables_.emplace(table.name(), table);
  }
  auto alive = membership_.alive();
  {
    std::lock_guard lock(mu_);
    in_place = alive == sliced_on_;
  }
  try {
    if (in_place) {
      distribute({table.name()}, alive);
    } else {
      ensure_slices(alive);
    }
  } catch (...) {
    std::lock_guard lock(mu_);
    tables_.erase(table.name());
    sliced_on_.clear();
    throw;
  }
}

bool Coordinator::has_table(const std::string& name) const {
  std::lock_guard lock(mu_);
  return tables_.contains(name);
}

void Coordinator::ensure_slices(const std::vector<NodeId>& alive) {
  std::vector<std::string> names;
  {
    std::lock_guard lock(mu_);
    bool stale = std::any_of(alive.begin(), alive.end(), [&](NodeId n) { return stale_.contains(n); });
    if (alive == sliced_on_ && !stale) return;
    for (const auto& [name, t] : tables_) names.push_back(name);
  }
  log("re-slicing " + std::to_string(names.size()) + " table(s) over nodes " + join_ids(alive));
  distribute(names, alive);
  std::lock_guard lock(mu_);
  sliced_on_ = alive;
  for (NodeId n : alive) stale_.erase(n);
}

void Coordinator::cancel(QueryExecution& e, const std::vector<NodeId>& nodes) {
  ControlMessage m;
  m.type = MessageType::kCancel;
  m.query = e.query_id;
  m.node = id();
  for (NodeId n : nodes) {
    try {
      send(n, m);
    } catch (const Error& err) {
      spdlog::debug("cancel to node {} not delivered: {}", n, err.what());
    }
  }
}

QueryExecution Coordinator::dispatch(std::string_view plan_document) {
  auto alive = membership_.alive();
  if (alive.empty()) raise(ErrorCode::kNoAliveNodes, "no alive node to dispatch to");

  QueryExecution e;
  plan::Catalog catalog;
  {
    std::lock_guard lock(mu_);
    e.query_id = next_query_++;
    for (const auto& [name, t] : tables_) catalog.add({name, t.schema()});
  }
  plan::ValidateOptions vopts{local_.engine().config().groupby_override};
  auto physical = plan::validate_plan(plan::parse_plan(plan_document, plan::all_relations()), catalog, vopts);
  e.fragments = plan::split_fragments(physical);
  // An exchange-free plan has no way to combine per-slice results, so it runs
  // on the coordinator over whole tables.
  if (e.fragments.fragments.size() == 1) alive = {id()};
  ensure_slices(alive);
  e.nodes = alive;
  e.placement = place_fragments(e.fragments, alive, id());
  for (const auto& [f, ns] : e.placement.nodes) {
    for (NodeId n : ns) e.status[{f, n}] = FragmentStatus::kPending;
    log("query " + std::to_string(e.query_id) + ": fragment " + std::to_string(f) + " -> nodes " + join_ids(ns));
  }
  {
    std::lock_guard lock(mu_);
    inbox_[e.query_id];
    auto& p = profilers_[e.query_id];
    p = std::make_unique<exec::Profiler>();
    p->begin();
  }

  ControlMessage prep;
  prep.type = MessageType::kPrep;
  prep.query = e.query_id;
  prep.node = id();
  PrepMessage pm;
  pm.query = e.query_id;
  pm.plan = std::string(plan_document);
  pm.coordinator = id();
  for (NodeId n : alive) pm.nodes.push_back(membership_.address(n));
  prep.prep = std::move(pm);

  auto fail = [&](ErrorCode code, const std::string& msg) {
    cancel(e, e.nodes);
    e.error = {code, msg};
    finish(e);
    raise(code, msg);
  };

  for (NodeId n : alive) {
    try {
      send(n, prep);
    } catch (const Error& err) {
      fail(ErrorCode::kDispatchTimeout, "node " + std::to_string(n) + " unreachable: " + bare_message(err));
    }
  }
  std::set<NodeId> acked;
  auto deadline = Clock::now() + options_.dispatch_timeout;
  while (acked.size() < alive.size()) {
    auto left = std::chrono::duration_cast<exchange::Millis>(deadline - Clock::now());
    auto r = left.count() > 0 ? wait_reply(e.query_id, left) : std::nullopt;
    if (!r) {
      fail(ErrorCode::kDispatchTimeout, "PREP for query " + std::to_string(e.query_id) + " acknowledged by " +
                                            std::to_string(acked.size()) + " of " + std::to_string(alive.size()) +
                                            " nodes");
    }
    if (r->type == MessageType::kError) {
      fail(r->code.value_or(ErrorCode::kInternal), "node " + std::to_string(r->node) + ": " + r->message);
    }
    if (r->type == MessageType::kAck) acked.insert(r->node);
  }

  ControlMessage start;
  start.type = MessageType::kStart;
  start.query = e.query_id;
  start.node = id();
  for (NodeId n : alive) {
    try {
      send(n, start);
    } catch (const Error& err) {
      fail(ErrorCode::kNodeLost, "node " + std::to_string(n) + " lost before start: " + bare_message(err));
    }
  }
  for (auto& [k, s] : e.status) s = FragmentStatus::kRunning;
  log("query " + std::to_string(e.query_id) + ": started on nodes " + join_ids(alive));
  return e;
}

void Coordinator::finish(QueryExecution& e) {
  std::unique_ptr<exec::Profiler> prof;
  {
    std::lock_guard lock(mu_);
    auto it = profilers_.find(e.query_id);
    if (it != profilers_.end()) {
      prof = std::move(it->second);
      profilers_.erase(it);
    }
    inbox_.erase(e.query_id);
  }
  if (!prof) return;
  prof->end();
  auto r = prof->report();
  e.timing = TimingReport{r.total_ns, r.compute_ns, r.exchange_ns, r.other_ns, r};
}

std::optional<NodeId> Coordinator::wait_for_death(const std::set<NodeId>& candidates) {
  auto deadline = Clock::now() + membership_.timeout() + options_.heartbeat_interval * 2;
  while (true) {
    for (NodeId n : candidates) {
      if (membership_.status(n) == NodeStatus::kDead) return n;
    }
    if (Clock::now() >= deadline || stopping_) return std::nullopt;
    std::this_thread::sleep_for(options_.heartbeat_interval / 2);
  }
}

Table Coordinator::collect(QueryExecution& e) {
  auto& registry = local_.exchange().registry();
  exec::Profiler* prof = nullptr;
  {
    std::lock_guard lock(mu_);
    auto it = profilers_.find(e.query_id);
    if (it == profilers_.end()) raise(ErrorCode::kUnknownEntry, "query " + std::to_string(e.query_id) + " is not active");
    prof = it->second.get();
  }

  auto fail = [&](ErrorCode code, const std::string& msg, const std::set<NodeId>& running) {
    cancel(e, {running.begin(), running.end()});
    registry.drop_query(e.query_id);
    registry.abort(e.query_id, code, msg);
    for (auto& [k, s] : e.status) {
      if (s != FragmentStatus::kDone) s = FragmentStatus::kFailed;
    }
    e.error = {code, msg};
    finish(e);
    log("query " + std::to_string(e.query_id) + ": failed: " + msg);
    raise(code, msg);
  };

  std::set<NodeId> running(e.nodes.begin(), e.nodes.end());
  auto deadline = Clock::now() + options_.query_timeout;
  while (!running.empty()) {
    auto r = wait_reply(e.query_id, options_.heartbeat_interval);
    if (r && r->type == MessageType::kDone && running.contains(r->node)) {
      const auto& d = *r->done;
      running.erase(d.node);
      prof->absorb(d.spans);
      e.fallback_used |= d.fallback;
      for (int f : d.fragments) e.status[{f, d.node}] = FragmentStatus::kDone;
      if (!d.ok) {
        if (d.failed_fragment) e.status[{*d.failed_fragment, d.node}] = FragmentStatus::kFailed;
        auto code = d.code.value_or(ErrorCode::kInternal);
        auto msg = "node " + std::to_string(d.node) + ": " + d.message;
        if (code == ErrorCode::kTransportError || code == ErrorCode::kBackpressureTimeout) {
          // A peer that stopped answering usually explains a transport failure;
          // give membership one timeout to confirm before blaming the link.
          auto lost = wait_for_death(running);
          if (lost) {
            running.erase(*lost);
            fail(ErrorCode::kNodeLost,
                 "node " + std::to_string(*lost) + " lost during query " + std::to_string(e.query_id), running);
          }
        }
        fail(code, msg, running);
      }
    } else if (r && r->type == MessageType::kError) {
      running.erase(r->node);
      fail(r->code.value_or(ErrorCode::kInternal), "node " + std::to_string(r->node) + ": " + r->message, running);
    }
    auto dead = std::find_if(running.begin(), running.end(),
                             [&](NodeId n) { return membership_.status(n) == NodeStatus::kDead; });
    if (dead != running.end()) {
      NodeId n = *dead;
      running.erase(dead);
      fail(ErrorCode::kNodeLost, "node " + std::to_string(n) + " lost during query " + std::to_string(e.query_id),
           running);
    }
    if (Clock::now() > deadline) {
      fail(ErrorCode::kTransportError, "query " + std::to_string(e.query_id) + " timed out", running);
    }
  }

  const auto& root = e.fragments.root();
  const auto& producers = e.placement.of(root.id);
  Table result;
  try {
    exec::Profiler::Scope scope(prof, exec::Category::kExchange, -1, "result receive");
    result = registry.receive(e.query_id, plan::kResultExchangeId, {producers.begin(), producers.end()},
                              {exchange::ReceiveMode::kCollect, {}, root.root->schema}, -1, options_.dispatch_timeout);
    registry.deregister(e.query_id, plan::kResultExchangeId, -1);
  } catch (const Error& err) {
    fail(err.code(), bare_message(err), {});
  }
  registry.drop_query(e.query_id);
  finish(e);
  log("query " + std::to_string(e.query_id) + ": done, " + std::to_string(result.num_rows()) + " rows");
  return Table("result", result.schema(), result.batches());
}

Table Coordinator::run(std::string_view plan_document, QueryExecution* execution) {
  QueryExecution local;
  auto& e = execution ? *execution : local;
  e = dispatch(plan_document);
  return collect(e);
}

TimingReport Coordinator::timing_report(const QueryExecution& e) const {
  if (!e.timing) raise(ErrorCode::kInvalidArgument, "query " + std::to_string(e.query_id) + " is not terminal");
  return *e.timing;
}

LocalCluster::LocalCluster(size_t nodes, NodeOptions node_options, CoordinatorOptions options)
    : node_options_(std::move(node_options)), hub_(exchange::LoopbackHub::create()) {
  if (nodes == 0) raise(ErrorCode::kInvalidArgument, "a cluster needs at least one node");
  for (size_t i = 0; i < nodes; ++i) {
    nodes_.push_back(std::make_unique<NodeRuntime>(hub_->endpoint(static_cast<NodeId>(i)), node_options_));
  }
  coordinator_ = std::make_unique<Coordinator>(*nodes_[0], options);
  for (size_t i = 1; i < nodes; ++i) coordinator_->add_node({static_cast<NodeId>(i), "", 0});
  coordinator_->start_heartbeats();
}

LocalCluster::~LocalCluster() {
  coordinator_->stop();
  for (auto& n : nodes_) n->stop();
}

void LocalCluster::kill(NodeId id) { hub_->kill(id); }

void LocalCluster::restart(NodeId id) {
  if (id == coordinator_->id()) raise(ErrorCode::kInvalidArgument, "the coordinator node cannot be restarted");
  nodes_.at(id)->stop();
  hub_->revive(id);
  nodes_[id] = std::make_unique<NodeRuntime>(hub_->endpoint(id), node_options_);
  ControlMessage join;
  join.type = MessageType::kJoin;
  join.node = id;
  join.join = NodeAddress{id, "", 0};
  nodes_[id]->send(coordinator_->id(), join);
}

}  // namespace siriette::coordinator
