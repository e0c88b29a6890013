#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "siriette/buffer/buffer_manager.hpp"
#include "siriette/exec/pipeline.hpp"
#include "siriette/exec/profiler.hpp"
#include "siriette/kernels/backend.hpp"

namespace siriette::exec {

inline constexpr size_t kDefaultBatchRows = 65536;

struct ExecOptions {
  size_t workers = 1;
  size_t batch_size_rows = kDefaultBatchRows;
  uint64_t narrow_index_limit = SelectionVector::kDefaultNarrowLimit;
  std::shared_ptr<const kernels::KernelBackend> backend;  // vectorized when null
};

struct ExecInputs {
  // Base tables are pinned from here; intermediates reserve processing bytes.
  buffer::BufferManager* buffers = nullptr;
  // Received exchange tables for fragment plans, keyed by exchange id.
  std::map<uint32_t, Table> exchange_sources;
};

struct ExecEvent {
  enum class Kind { kEnqueued, kStarted, kFinished, kCancelled, kSealed };
  Kind kind = Kind::kEnqueued;
  int pipeline = 0;
  int64_t task = -1;  // -1 for seal events
};

struct ExecStats {
  uint64_t tasks_created = 0;
  uint64_t tasks_finished = 0;
  uint64_t tasks_cancelled = 0;
  std::vector<ExecEvent> events;
};

struct JoinState {
  Batch build_rows;
  std::shared_ptr<const kernels::JoinIndex> index;
};

// Per-query operator state: join tables, aggregate partials, sort buffers,
// limit counters and the processing reservations backing them. Operators
// read and advance state only through this object.
class ExecContext {
 public:
  ExecContext(ExecOptions options, ExecInputs inputs, Profiler* profiler = nullptr);
  ~ExecContext();
  ExecContext(const ExecContext&) = delete;
  ExecContext& operator=(const ExecContext&) = delete;

  const ExecOptions& options() const;
  const kernels::KernelBackend& backend() const;
  Profiler* profiler() const;
  const ExecInputs& inputs() const;

  // Builds and registers the hash table of a join node from its build rows.
  void install_join(const plan::PhysicalNode& join, Batch build_rows);
  const JoinState& join_state(const plan::PhysicalNode& join) const;
  kernels::Limiter& limiter(const plan::PhysicalNode& limit);

  // Charges `bytes` to the processing region for the rest of the query.
  void hold(uint64_t bytes, const std::string& owner);
  // Drops all held state and reservations.
  void clear();

  void cancel();
  bool cancelled() const;
  ExecStats stats() const;

  struct Impl;
  Impl& impl() { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

// Drives one batch through a streaming operator (filter, project, join
// probe, limit, exchange pass-through). Output batches hold at most
// batch_size_rows rows.
std::vector<Batch> push(const plan::PhysicalNode& op, const Batch& b, ExecContext& ctx);

// Runs the DAG on options.workers threads. The result equals the serial run
// for any worker count; rows are in task order.
Table execute(const PipelineDag& dag, ExecContext& ctx);

}  // namespace siriette::exec
