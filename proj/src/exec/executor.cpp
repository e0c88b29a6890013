#include "siriette/exec/executor.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "siriette/common/error.hpp"
#include "siriette/common/log.hpp"

namespace siriette::exec {

using kernels::AggMode;
using kernels::AggSpec;
using plan::AggPhase;
using plan::PhysicalNode;
using plan::RelKind;

namespace {

Batch concat_all(const std::vector<Batch>& parts, const std::vector<DataType>& types) {
  std::vector<Batch> nonempty;
  for (const auto& b : parts) {
    if (b.num_rows() > 0) nonempty.push_back(b);
  }
  if (nonempty.empty()) return Batch::empty(types);
  if (nonempty.size() == 1) return nonempty.front();
  return concat_batches(nonempty);
}

uint64_t bytes_of(const std::vector<Batch>& batches) {
  uint64_t n = 0;
  for (const auto& b : batches) n += b.byte_size();
  return n;
}

std::string owner_of(const PhysicalNode& n) {
  return std::string(plan::rel_kind_name(n.kind())) + "#" + std::to_string(n.id);
}

}  // namespace

struct ExecContext::Impl {
  ExecOptions options;
  ExecInputs inputs;
  Profiler* profiler = nullptr;
  std::shared_ptr<const kernels::KernelBackend> backend;

  mutable std::mutex mu;
  std::map<int, JoinState> joins;
  std::map<int, std::unique_ptr<kernels::Limiter>> limiters;
  std::map<int, Batch> breaker_results;
  std::vector<buffer::Reservation> held;
  std::vector<buffer::CachePin> pins;

  std::atomic<bool> cancelled{false};
  mutable std::mutex stats_mu;
  ExecStats stats;

  void event(ExecEvent::Kind kind, int pipeline, int64_t task) {
    std::lock_guard lock(stats_mu);
    stats.events.push_back({kind, pipeline, task});
    switch (kind) {
      case ExecEvent::Kind::kEnqueued: ++stats.tasks_created; break;
      case ExecEvent::Kind::kFinished: ++stats.tasks_finished; break;
      case ExecEvent::Kind::kCancelled: ++stats.tasks_cancelled; break;
      default: break;
    }
  }

  buffer::Reservation reserve(uint64_t bytes, const std::string& owner) {
    if (bytes == 0 || !inputs.buffers) return {};
    return inputs.buffers->reserve(buffer::RegionKind::kProcessing, bytes, owner);
  }
};

ExecContext::ExecContext(ExecOptions options, ExecInputs inputs, Profiler* profiler) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  if (impl_->options.workers == 0) impl_->options.workers = 1;
  if (impl_->options.batch_size_rows == 0) impl_->options.batch_size_rows = kDefaultBatchRows;
  impl_->inputs = std::move(inputs);
  impl_->profiler = profiler;
  impl_->backend = impl_->options.backend ? impl_->options.backend : kernels::vectorized_backend();
}

ExecContext::~ExecContext() { clear(); }

const ExecOptions& ExecContext::options() const { return impl_->options; }
const kernels::KernelBackend& ExecContext::backend() const { return *impl_->backend; }
Profiler* ExecContext::profiler() const { return impl_->profiler; }
const ExecInputs& ExecContext::inputs() const { return impl_->inputs; }

void ExecContext::install_join(const PhysicalNode& join, Batch build_rows) {
  const auto& rel = join.as<plan::JoinRel>();
  std::vector<Column> keys;
  for (const auto& k : rel.keys) keys.push_back(build_rows.column(static_cast<size_t>(k.right)));
  JoinState state;
  {
    Profiler::Scope scope(impl_->profiler, Category::kJoin, join.id, "join_build");
    state.index = impl_->backend->join_build(std::move(keys));
  }
  state.build_rows = std::move(build_rows);
  hold(state.build_rows.byte_size() + state.index->byte_size(), owner_of(join) + " build");
  std::lock_guard lock(impl_->mu);
  impl_->joins[join.id] = std::move(state);
}

const JoinState& ExecContext::join_state(const PhysicalNode& join) const {
  std::lock_guard lock(impl_->mu);
  auto it = impl_->joins.find(join.id);
  if (it == impl_->joins.end()) raise(ErrorCode::kInternal, "join " + owner_of(join) + " probed before its build sealed");
  return it->second;
}

kernels::Limiter& ExecContext::limiter(const PhysicalNode& limit) {
  std::lock_guard lock(impl_->mu);
  auto& slot = impl_->limiters[limit.id];
  if (!slot) slot = std::make_unique<kernels::Limiter>(static_cast<uint64_t>(limit.as<plan::LimitRel>().count));
  return *slot;
}

void ExecContext::hold(uint64_t bytes, const std::string& owner) {
  auto r = impl_->reserve(bytes, owner);
  if (!r.active()) return;
  std::lock_guard lock(impl_->mu);
  impl_->held.push_back(std::move(r));
}

void ExecContext::clear() {
  std::lock_guard lock(impl_->mu);
  impl_->joins.clear();
  impl_->limiters.clear();
  impl_->breaker_results.clear();
  impl_->held.clear();
  impl_->pins.clear();
}

void ExecContext::cancel() { impl_->cancelled = true; }
bool ExecContext::cancelled() const { return impl_->cancelled; }

ExecStats ExecContext::stats() const {
  std::lock_guard lock(impl_->stats_mu);
  return impl_->stats;
}

// ------------------------------------------------------------------ operators

std::vector<Batch> push(const PhysicalNode& op, const Batch& b, ExecContext& ctx) {
  auto& I = ctx.impl();
  const auto& backend = *I.backend;
  switch (op.kind()) {
    case RelKind::kFilter: {
      Profiler::Scope scope(I.profiler, Category::kFilter, op.id, "filter");
      auto pred = backend.eval_expr(*op.as<plan::FilterRel>().condition, b);
      auto sel = backend.filter(pred);
      if (sel.size() == b.num_rows()) return {b};
      if (sel.empty()) return {};
      return {gather(b, sel)};
    }
    case RelKind::kProject: {
      Profiler::Scope scope(I.profiler, Category::kOther, op.id, "project");
      std::vector<Column> cols;
      for (const auto& e : op.as<plan::ProjectRel>().expressions) cols.push_back(backend.eval_expr(*e, b));
      return {Batch(std::move(cols), b.num_rows())};
    }
    case RelKind::kHashJoin: {
      Profiler::Scope scope(I.profiler, Category::kJoin, op.id, "join_probe");
      const auto& rel = op.as<plan::JoinRel>();
      const auto& state = ctx.join_state(op);
      std::vector<Column> keys;
      for (const auto& k : rel.keys) keys.push_back(b.column(static_cast<size_t>(k.left)));
      auto r = backend.join_probe(*state.index, keys, rel.type, I.options.narrow_index_limit);
      if (r.probe.empty()) return {};
      std::vector<Column> cols;
      for (const auto& c : b.columns()) cols.push_back(gather(c, r.probe));
      if (rel.type == plan::JoinType::kInner || rel.type == plan::JoinType::kLeft) {
        for (const auto& c : state.build_rows.columns()) cols.push_back(gather(c, r.build));
      }
      Batch out(std::move(cols), r.probe.size());
      if (out.num_rows() <= I.options.batch_size_rows) return {out};
      return rechunk(out, I.options.batch_size_rows);
    }
    case RelKind::kLimit: {
      Profiler::Scope scope(I.profiler, Category::kOther, op.id, "limit");
      auto out = ctx.limiter(op).push(b);
      if (!out || out->num_rows() == 0) return {};
      return {*out};
    }
    case RelKind::kExchange:
      return {b};
    default:
      raise(ErrorCode::kInternal, "operator " + owner_of(op) + " is not a streaming operator");
  }
}

namespace {

// Reads projected columns of a cached batch and applies a pushed-down predicate.
std::vector<Batch> scan(const PhysicalNode& read, const Batch& morsel, ExecContext& ctx) {
  auto& I = ctx.impl();
  const auto& rel = read.as<plan::ReadRel>();
  Batch projected;
  {
    Profiler::Scope scope(I.profiler, Category::kOther, read.id, "scan");
    std::vector<Column> cols;
    for (int c : rel.columns) cols.push_back(morsel.column(static_cast<size_t>(c)));
    projected = Batch(std::move(cols), morsel.num_rows());
  }
  if (!rel.predicate) return {projected};
  Profiler::Scope scope(I.profiler, Category::kFilter, read.id, "scan_filter");
  auto sel = I.backend->filter(I.backend->eval_expr(*rel.predicate, projected));
  if (sel.size() == projected.num_rows()) return {projected};
  if (sel.empty()) return {};
  return {gather(projected, sel)};
}

// Aggregate evaluated as per-task partials followed by one merge at seal.
struct AggPlan {
  std::vector<int> keys;
  std::vector<AggSpec> specs;
  AggMode task_mode = AggMode::kPartial;
  AggMode seal_mode = AggMode::kFinal;
  std::vector<DataType> partial_types;
};

AggPlan agg_plan(const PhysicalNode& n) {
  const auto& rel = n.as<plan::AggregateRel>();
  const auto& in = n.inputs[0]->schema;
  AggPlan p;
  int k = static_cast<int>(rel.group_by.size());
  for (int i = 0; i < k; ++i) {
    p.keys.push_back(i);
    p.partial_types.push_back(in[static_cast<size_t>(rel.group_by[static_cast<size_t>(i)])].type);
  }
  int offset = k;
  for (const auto& m : rel.measures) {
    std::vector<DataType> acc;
    if (rel.phase == AggPhase::kFinal) {
      acc.push_back(in[static_cast<size_t>(m.arg->column)].type);
      if (m.fn == plan::AggFn::kAvg) acc.push_back(in[static_cast<size_t>(m.arg->column) + 1].type);
    } else {
      acc = kernels::agg_output_types(m.fn, m.arg ? m.arg->type : DataType::int64(), AggMode::kPartial);
    }
    p.specs.push_back({m.fn, offset});
    offset += static_cast<int>(acc.size());
    p.partial_types.insert(p.partial_types.end(), acc.begin(), acc.end());
  }
  switch (rel.phase) {
    case AggPhase::kSingle:
      p.task_mode = AggMode::kPartial;
      p.seal_mode = AggMode::kFinal;
      break;
    case AggPhase::kPartial:
      p.task_mode = AggMode::kPartial;
      p.seal_mode = AggMode::kCombine;
      break;
    case AggPhase::kFinal:
      p.task_mode = AggMode::kCombine;
      p.seal_mode = AggMode::kFinal;
      break;
  }
  return p;
}

Batch run_group(const PhysicalNode& n, const Batch& b, const AggPlan& p, std::span<const AggSpec> specs, AggMode mode,
                ExecContext& ctx) {
  auto& I = ctx.impl();
  if (p.keys.empty()) {
    Profiler::Scope scope(I.profiler, Category::kAggregation, n.id, "reduce");
    return I.backend->reduce(b, specs, mode);
  }
  Profiler::Scope scope(I.profiler, Category::kGroupBy, n.id, "group_by");
  if (n.strategy == plan::GroupStrategy::kSort) return I.backend->group_by_sort(b, p.keys, specs, mode);
  return I.backend->group_by_hash(b, p.keys, specs, mode);
}

// Per-task partial over raw rows (single/partial) or accumulators (final).
Batch aggregate_task(const PhysicalNode& n, const Batch& input, ExecContext& ctx) {
  auto& I = ctx.impl();
  const auto& rel = n.as<plan::AggregateRel>();
  auto p = agg_plan(n);
  std::vector<Column> cols;
  std::vector<AggSpec> task_specs;
  {
    Profiler::Scope scope(I.profiler, Category::kOther, n.id, "aggregate_input");
    for (int g : rel.group_by) cols.push_back(input.column(static_cast<size_t>(g)));
    for (size_t i = 0; i < rel.measures.size(); ++i) {
      const auto& m = rel.measures[i];
      if (rel.phase == AggPhase::kFinal) {
        cols.push_back(input.column(static_cast<size_t>(m.arg->column)));
        if (m.fn == plan::AggFn::kAvg) cols.push_back(input.column(static_cast<size_t>(m.arg->column) + 1));
        task_specs.push_back(p.specs[i]);
      } else if (m.arg) {
        task_specs.push_back({m.fn, static_cast<int>(cols.size())});
        cols.push_back(I.backend->eval_expr(*m.arg, input));
      } else {
        task_specs.push_back({m.fn, -1});
      }
    }
  }
  Batch prepared(std::move(cols), input.num_rows());
  return run_group(n, prepared, p, task_specs, p.task_mode, ctx);
}

Batch aggregate_seal(const PhysicalNode& n, const std::vector<Batch>& partials, ExecContext& ctx) {
  auto p = agg_plan(n);
  auto merged = concat_all(partials, p.partial_types);
  return run_group(n, merged, p, p.specs, p.seal_mode, ctx);
}

// ------------------------------------------------------------------ scheduler

struct SinkState {
  std::mutex mu;
  std::map<int64_t, std::vector<Batch>> parts;
  std::vector<buffer::Reservation> reservations;
};

struct LimitGate {
  std::mutex mu;
  int64_t next = 0;
  std::map<int64_t, std::vector<Batch>> pending;
};

struct TaskItem {
  int pipeline = 0;
  int64_t task = 0;
  Batch morsel;
};

class Run {
 public:
  Run(const PipelineDag& dag, ExecContext& ctx) : dag_(dag), ctx_(ctx), I_(ctx.impl()) {
    size_t n = dag.pipelines.size();
    sinks_.resize(n);
    for (auto& s : sinks_) s = std::make_unique<SinkState>();
    remaining_.assign(n, 0);
    waiting_.assign(n, 0);
    dependents_.resize(n);
    for (const auto& p : dag.pipelines) {
      waiting_[static_cast<size_t>(p.id)] = static_cast<int>(p.deps.size());
      for (int d : p.deps) dependents_[static_cast<size_t>(d)].push_back(p.id);
      for (const auto* op : p.ops) {
        if (op->kind() == RelKind::kLimit) gates_[op->id] = std::make_unique<LimitGate>();
      }
    }
    unsealed_ = static_cast<int>(n);
  }

  Table run() {
    std::vector<int> ready;
    for (const auto& p : dag_.pipelines) {
      if (p.deps.empty()) ready.push_back(p.id);
    }
    for (int p : ready) activate(p);

    size_t extra = I_.options.workers - 1;
    std::vector<std::thread> threads;
    threads.reserve(extra);
    for (size_t i = 0; i < extra; ++i) threads.emplace_back([this] { worker(); });
    worker();
    for (auto& t : threads) t.join();

    if (error_) std::rethrow_exception(error_);
    return std::move(result_);
  }

 private:
  const Pipeline& pipeline(int id) const { return dag_.pipelines[static_cast<size_t>(id)]; }

  void fail(std::exception_ptr e) {
    std::lock_guard lock(mu_);
    if (!error_) error_ = e;
    aborted_ = true;
    I_.cancelled = true;
    cv_.notify_all();
  }

  std::vector<Batch> morsels(const Pipeline& p) {
    std::vector<Batch> out;
    auto split = [&](const Batch& b) {
      if (b.num_rows() == 0) return;
      if (b.num_rows() <= I_.options.batch_size_rows) {
        out.push_back(b);
      } else {
        for (auto& part : rechunk(b, I_.options.batch_size_rows)) out.push_back(std::move(part));
      }
    };
    switch (p.source_kind) {
      case SourceKind::kScan: {
        if (!I_.inputs.buffers) raise(ErrorCode::kInternal, "scan without a buffer manager");
        auto pin = I_.inputs.buffers->pin(p.source->as<plan::ReadRel>().table);
        for (const auto& b : pin->table.batches()) split(b);
        std::lock_guard lock(I_.mu);
        I_.pins.push_back(std::move(pin));
        break;
      }
      case SourceKind::kExchange: {
        auto id = p.source->as<plan::ExchangeSourceRel>().exchange_id;
        auto it = I_.inputs.exchange_sources.find(id);
        if (it == I_.inputs.exchange_sources.end()) {
          raise(ErrorCode::kInternal, "exchange " + std::to_string(id) + " has no received input");
        }
        for (const auto& b : it->second.batches()) split(b);
        break;
      }
      case SourceKind::kBreaker: {
        Batch sealed;
        {
          std::lock_guard lock(I_.mu);
          sealed = I_.breaker_results.at(p.source->id);
        }
        split(sealed);
        break;
      }
    }
    return out;
  }

  // Queues the tasks of a pipeline whose dependencies are sealed.
  void activate(int id) {
    std::vector<Batch> list;
    try {
      list = morsels(pipeline(id));
    } catch (...) {
      fail(std::current_exception());
      return;
    }
    if (list.empty()) {
      {
        std::lock_guard lock(mu_);
        remaining_[static_cast<size_t>(id)] = 0;
      }
      complete(id);
      return;
    }
    std::lock_guard lock(mu_);
    remaining_[static_cast<size_t>(id)] = static_cast<int64_t>(list.size());
    for (size_t t = 0; t < list.size(); ++t) {
      I_.event(ExecEvent::Kind::kEnqueued, id, static_cast<int64_t>(t));
      queue_.push_back({id, static_cast<int64_t>(t), std::move(list[t])});
    }
    cv_.notify_all();
  }

  // Seals a finished pipeline and activates dependents that became ready.
  void complete(int id) {
    {
      std::lock_guard lock(mu_);
      if (aborted_) return;
    }
    try {
      seal(pipeline(id));
    } catch (...) {
      fail(std::current_exception());
      return;
    }
    I_.event(ExecEvent::Kind::kSealed, id, -1);
    std::vector<int> ready;
    {
      std::lock_guard lock(mu_);
      --unsealed_;
      for (int d : dependents_[static_cast<size_t>(id)]) {
        if (--waiting_[static_cast<size_t>(d)] == 0) ready.push_back(d);
      }
      cv_.notify_all();
    }
    for (int d : ready) activate(d);
  }

  void worker() {
    for (;;) {
      TaskItem item;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !queue_.empty() || finished(); });
        if (queue_.empty()) return;
        item = std::move(queue_.front());
        queue_.pop_front();
        if (aborted_) {
          I_.event(ExecEvent::Kind::kCancelled, item.pipeline, item.task);
          cv_.notify_all();
          continue;
        }
        ++running_;
      }
      I_.event(ExecEvent::Kind::kStarted, item.pipeline, item.task);
      bool ok = true;
      try {
        run_task(pipeline(item.pipeline), item.task, item.morsel);
      } catch (...) {
        ok = false;
        fail(std::current_exception());
      }
      I_.event(ExecEvent::Kind::kFinished, item.pipeline, item.task);
      bool last = false;
      {
        std::lock_guard lock(mu_);
        --running_;
        last = --remaining_[static_cast<size_t>(item.pipeline)] == 0 && ok && !aborted_;
        cv_.notify_all();
      }
      if (last) complete(item.pipeline);
    }
  }

  bool finished() const { return running_ == 0 && queue_.empty() && (aborted_ || unsealed_ == 0); }

  void run_task(const Pipeline& p, int64_t task, const Batch& morsel) {
    // Once a limit upstream of everything else is satisfied the task has no effect.
    for (size_t k = 0; k < p.ops.size(); ++k) {
      if (p.ops[k]->kind() != RelKind::kLimit) continue;
      auto& gate = *gates_.at(p.ops[k]->id);
      bool done;
      {
        std::lock_guard lock(gate.mu);
        done = ctx_.limiter(*p.ops[k]).done();
      }
      if (done) {
        process(p, k, task, {});
        return;
      }
      break;
    }
    std::vector<Batch> batches;
    if (p.source_kind == SourceKind::kScan) {
      batches = scan(*p.source, morsel, ctx_);
    } else {
      batches.push_back(morsel);
    }
    process(p, 0, task, std::move(batches));
  }

  void process(const Pipeline& p, size_t k, int64_t task, std::vector<Batch> batches) {
    buffer::Reservation current;
    for (; k < p.ops.size(); ++k) {
      if (I_.cancelled) raise(ErrorCode::kCancelled, "query cancelled");
      const auto* op = p.ops[k];
      if (op->kind() == RelKind::kLimit) {
        auto& gate = *gates_.at(op->id);
        std::lock_guard lock(gate.mu);
        gate.pending[task] = std::move(batches);
        while (!gate.pending.empty() && gate.pending.begin()->first == gate.next) {
          auto node = gate.pending.extract(gate.pending.begin());
          ++gate.next;
          std::vector<Batch> out;
          for (const auto& b : node.mapped()) {
            for (auto& o : push(*op, b, ctx_)) out.push_back(std::move(o));
          }
          process(p, k + 1, node.key(), std::move(out));
        }
        return;
      }
      std::vector<Batch> next;
      for (const auto& b : batches) {
        for (auto& o : push(*op, b, ctx_)) next.push_back(std::move(o));
      }
      if (op->kind() != RelKind::kExchange) {
        auto r = I_.reserve(bytes_of(next), owner_of(*op));
        current = std::move(r);
      }
      batches = std::move(next);
    }
    deposit(p, task, std::move(batches));
  }

  void deposit(const Pipeline& p, int64_t task, std::vector<Batch> batches) {
    if (p.sink_kind == SinkKind::kAggregate) {
      auto types = types_of(p.sink->inputs[0]->schema);
      auto input = concat_all(batches, types);
      batches = {aggregate_task(*p.sink, input, ctx_)};
    }
    auto r = I_.reserve(bytes_of(batches), "sink of pipeline " + std::to_string(p.id));
    auto& sink = *sinks_[static_cast<size_t>(p.id)];
    std::lock_guard lock(sink.mu);
    auto& slot = sink.parts[task];
    for (auto& b : batches) slot.push_back(std::move(b));
    if (r.active()) sink.reservations.push_back(std::move(r));
  }

  void seal(const Pipeline& p) {
    auto& sink = *sinks_[static_cast<size_t>(p.id)];
    std::vector<Batch> parts;
    {
      std::lock_guard lock(sink.mu);
      for (auto& [task, list] : sink.parts) {
        for (auto& b : list) parts.push_back(std::move(b));
      }
      sink.parts.clear();
    }
    switch (p.sink_kind) {
      case SinkKind::kResult: {
        Schema schema = dag_.root->schema;
        std::vector<Batch> out;
        for (auto& b : parts) {
          if (b.num_rows() > 0) out.push_back(std::move(b));
        }
        result_ = Table("result", std::move(schema), std::move(out));
        break;
      }
      case SinkKind::kJoinBuild: {
        auto build = concat_all(parts, types_of(p.sink->inputs[1]->schema));
        ctx_.install_join(*p.sink, std::move(build));
        break;
      }
      case SinkKind::kAggregate: {
        auto out = aggregate_seal(*p.sink, parts, ctx_);
        ctx_.hold(out.byte_size(), owner_of(*p.sink));
        std::lock_guard lock(I_.mu);
        I_.breaker_results[p.sink->id] = std::move(out);
        break;
      }
      case SinkKind::kSort: {
        auto all = concat_all(parts, types_of(p.sink->inputs[0]->schema));
        Batch sorted;
        {
          Profiler::Scope scope(I_.profiler, Category::kOrderBy, p.sink->id, "sort");
          auto perm = I_.backend->sort(all, p.sink->as<plan::SortRel>().keys);
          sorted = gather(all, perm);
        }
        ctx_.hold(sorted.byte_size(), owner_of(*p.sink));
        std::lock_guard lock(I_.mu);
        I_.breaker_results[p.sink->id] = std::move(sorted);
        break;
      }
    }
    std::lock_guard lock(sink.mu);
    sink.reservations.clear();
  }

  const PipelineDag& dag_;
  ExecContext& ctx_;
  ExecContext::Impl& I_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<TaskItem> queue_;
  int running_ = 0;
  int unsealed_ = 0;
  bool aborted_ = false;
  std::exception_ptr error_;
  std::vector<int64_t> remaining_;
  std::vector<int> waiting_;
  std::vector<std::vector<int>> dependents_;
  std::vector<std::unique_ptr<SinkState>> sinks_;
  std::map<int, std::unique_ptr<LimitGate>> gates_;
  Table result_;
};

}  // namespace

Table execute(const PipelineDag& dag, ExecContext& ctx) {
  if (dag.pipelines.empty()) raise(ErrorCode::kInternal, "empty pipeline DAG");
  try {
    Run run(dag, ctx);
    return run.run();
  } catch (const Error&) {
    throw;
  } catch (const std::bad_alloc&) {
    raise(ErrorCode::kProcessingExhausted, "host allocation failed");
  } catch (const std::exception& e) {
    raise(ErrorCode::kInternal, e.what());
  }
}

}  // namespace siriette::exec
