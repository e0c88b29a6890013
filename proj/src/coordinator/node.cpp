#include "siriette/coordinator/node.hpp"

#include <algorithm>

#include "siriette/common/log.hpp"
#include "siriette/plan/document.hpp"
#include "siriette/plan/validate.hpp"

namespace siriette::coordinator {

using Clock = std::chrono::steady_clock;

NodeRuntime::NodeRuntime(std::shared_ptr<exchange::Transport> transport, NodeOptions options)
    : options_(std::move(options)), transport_(std::move(transport)) {
  engine_ = std::make_unique<engine::Engine>(options_.engine);
  exchange_ = std::make_unique<exchange::ExchangeService>(transport_, &engine_->buffers(), options_.exchange);
  dispatcher_ = std::thread([this] { dispatch_loop(); });
}

NodeRuntime::~NodeRuntime() { stop(); }

void NodeRuntime::stop() {
  if (stopping_.exchange(true)) return;
  if (dispatcher_.joinable()) dispatcher_.join();
  {
    std::lock_guard lock(mu_);
    for (auto& [id, q] : queries_) {
      q->cancelled = true;
      exchange_->registry().abort(id, ErrorCode::kCancelled, "node stopping");
    }
  }
  std::map<uint64_t, std::unique_ptr<Query>> queries;
  {
    std::lock_guard lock(mu_);
    queries.swap(queries_);
  }
  for (auto& [id, q] : queries) {
    if (q->worker.joinable()) q->worker.join();
  }
  exchange_->stop();
  transport_->close();
  replies_.close();
}

void NodeRuntime::send(NodeId to, const ControlMessage& m) { exchange_->send_control(to, encode(m)); }

std::optional<ControlMessage> NodeRuntime::next_reply(exchange::Millis timeout) {
  auto m = replies_.pop(timeout);
  if (!m) return std::nullopt;
  return decode(m->bytes);
}

std::vector<std::string> NodeRuntime::tables() const {
  std::lock_guard lock(mu_);
  return tables_;
}

void NodeRuntime::dispatch_loop() {
  while (!stopping_) {
    auto m = exchange_->next_control(exchange::Millis(50));
    if (!m) continue;
    try {
      handle(*m);
    } catch (const Error& e) {
      spdlog::warn("node {}: dropped control message from node {}: {}", id(), m->from, e.what());
    }
  }
}

void NodeRuntime::handle(const exchange::Message& raw) {
  auto m = decode(raw.bytes);
  if (!is_request(m.type)) {
    replies_.push(raw);
    return;
  }
  last_contact_ = Clock::now().time_since_epoch().count();
  auto reply = [&](const ControlMessage& r) {
    try {
      send(raw.from, r);
    } catch (const Error& e) {
      spdlog::debug("node {}: reply to node {} not delivered: {}", id(), raw.from, e.what());
    }
  };
  switch (m.type) {
    case MessageType::kStatus: {
      ControlMessage r;
      r.type = MessageType::kStatusReply;
      r.node = id();
      r.sequence = m.sequence;
      r.status = StatusReply{id(), m.sequence, tables()};
      reply(r);
      break;
    }
    case MessageType::kLoad: {
      try {
        const auto& l = *m.load;
        Table t(l.table, l.schema, {l.rows});
        {
          std::lock_guard lock(engine_mu_);
          if (l.replace && engine_->has_table(l.table)) engine_->drop_table(l.table);
          engine_->load_table(t);
        }
        {
          std::lock_guard lock(mu_);
          if (std::find(tables_.begin(), tables_.end(), l.table) == tables_.end()) tables_.push_back(l.table);
        }
        reply(make_ack(MessageType::kLoad, 0, id()));
      } catch (const Error& e) {
        reply(make_error(MessageType::kLoad, 0, id(), e));
      }
      break;
    }
    case MessageType::kPrep:
      try {
        prepare(m);
        reply(make_ack(MessageType::kPrep, m.query, id()));
      } catch (const Error& e) {
        reply(make_error(MessageType::kPrep, m.query, id(), e));
      }
      break;
    case MessageType::kStart:
      try {
        start(m.query);
      } catch (const Error& e) {
        reply(make_error(MessageType::kStart, m.query, id(), e));
      }
      break;
    case MessageType::kCancel: {
      std::lock_guard lock(mu_);
      auto it = queries_.find(m.query);
      if (it != queries_.end()) it->second->cancelled = true;
      exchange_->registry().abort(m.query, ErrorCode::kCancelled, "query " + std::to_string(m.query) + " cancelled");
      break;
    }
    default:
      break;
  }
}

void NodeRuntime::prepare(const ControlMessage& m) {
  const auto& p = *m.prep;
  reap();
  auto q = std::make_unique<Query>();
  q->id = p.query;
  q->coordinator = p.coordinator;
  {
    std::lock_guard lock(engine_mu_);
    plan::ValidateOptions vopts{options_.engine.groupby_override};
    q->plan = plan::validate_plan(plan::parse_plan(p.plan, plan::all_relations()), engine_->catalog(), vopts);
  }
  q->fragments = plan::split_fragments(q->plan);
  std::vector<NodeId> ids;
  for (const auto& n : p.nodes) ids.push_back(n.id);
  q->placement = place_fragments(q->fragments, ids, p.coordinator);

  if (auto* tcp = dynamic_cast<exchange::TcpTransport*>(transport_.get())) {
    for (const auto& n : p.nodes) {
      if (n.id != id() && !n.host.empty()) tcp->add_peer(n.id, n.host, n.port);
    }
  }
  std::lock_guard lock(mu_);
  if (queries_.contains(p.query)) {
    raise(ErrorCode::kInvalidArgument, "query " + std::to_string(p.query) + " is already prepared");
  }
  queries_[p.query] = std::move(q);
}

void NodeRuntime::start(uint64_t query) {
  std::lock_guard lock(mu_);
  auto it = queries_.find(query);
  if (it == queries_.end()) raise(ErrorCode::kUnknownEntry, "query " + std::to_string(query) + " was not prepared");
  auto* q = it->second.get();
  if (q->worker.joinable()) raise(ErrorCode::kInvalidArgument, "query " + std::to_string(query) + " already started");
  q->worker = std::thread([this, q] { execute(*q); });
}

void NodeRuntime::reap() {
  std::vector<std::unique_ptr<Query>> done;
  {
    std::lock_guard lock(mu_);
    for (auto it = queries_.begin(); it != queries_.end();) {
      if (it->second->finished) {
        done.push_back(std::move(it->second));
        it = queries_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& q : done) {
    if (q->worker.joinable()) q->worker.join();
  }
}

void NodeRuntime::execute(Query& q) {
  exec::Profiler prof;
  prof.begin();
  DoneMessage done;
  done.query = q.id;
  done.node = id();
  auto& registry = exchange_->registry();
  int current = -1;
  try {
    auto wake = Clock::now() + start_delay_.load();
    while (Clock::now() < wake && !q.cancelled && !stopping_) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    for (const auto& f : q.fragments.fragments) {
      if (!q.placement.runs(f.id, id())) continue;
      current = f.id;
      if (q.cancelled) raise(ErrorCode::kCancelled, "query " + std::to_string(q.id) + " cancelled");

      std::map<uint32_t, Table> inputs;
      for (uint32_t e : f.input_exchanges) {
        const auto& edge = q.fragments.edge(e);
        const auto& producers = q.placement.of(edge.producer);
        exchange::ReceiveSpec spec{edge.pattern == plan::ExchangePattern::kMerge ? exchange::ReceiveMode::kMerge
                                                                                  : exchange::ReceiveMode::kCollect,
                                   edge.merge_keys, edge.schema};
        exec::Profiler::Scope scope(&prof, exec::Category::kExchange, static_cast<int>(e), "exchange receive");
        inputs[e] = registry.receive(q.id, e, {producers.begin(), producers.end()}, spec, f.id,
                                     options_.receive_timeout);
      }

      engine::QueryResult r;
      {
        std::lock_guard lock(engine_mu_);
        r = engine_->run_fragment(f.root, inputs, {options_.mode, false, &prof});
      }
      if (r.used.tag == engine::EngineTag::kFallback) done.fallback = true;
      for (const auto& [e, t] : inputs) registry.deregister(q.id, e, f.id);

      exchange::SendSpec spec;
      spec.query = q.id;
      if (f.output_exchange) {
        const auto& edge = q.fragments.edge(*f.output_exchange);
        spec.exchange = edge.id;
        spec.pattern = edge.pattern;
        spec.targets = q.placement.of(edge.consumer);
        spec.keys = edge.keys;
      } else {
        spec.exchange = plan::kResultExchangeId;
        spec.pattern = plan::ExchangePattern::kMerge;
        spec.targets = {q.coordinator};
      }
      exec::Profiler::Scope scope(&prof, exec::Category::kExchange, static_cast<int>(spec.exchange), "exchange send");
      exchange_->send(spec, r.table.batches());
      done.fragments.push_back(f.id);
    }
  } catch (const Error& e) {
    done.ok = false;
    done.code = e.code();
    done.message = bare_message(e);
    if (current >= 0) done.failed_fragment = current;
  } catch (const std::exception& e) {
    done.ok = false;
    done.code = ErrorCode::kInternal;
    done.message = e.what();
    if (current >= 0) done.failed_fragment = current;
  }
  prof.end();
  // The result entry lives on the coordinator until collected; everything else
  // for this query is released here.
  if (q.coordinator != id()) registry.drop_query(q.id);
  done.spans = prof.spans();

  ControlMessage m;
  m.type = MessageType::kDone;
  m.query = q.id;
  m.node = id();
  m.done = std::move(done);
  try {
    send(q.coordinator, m);
  } catch (const Error& e) {
    spdlog::warn("node {}: completion of query {} not delivered: {}", id(), q.id, e.what());
  }
  q.finished = true;
}

}  // namespace siriette::coordinator
