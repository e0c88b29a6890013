#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "siriette/buffer/buffer_manager.hpp"
#include "siriette/exec/executor.hpp"
#include "siriette/plan/plan.hpp"

namespace siriette::engine {

struct EngineConfig {
  size_t workers = 0;  // 0: hardware concurrency
  size_t batch_size_rows = exec::kDefaultBatchRows;
  std::optional<plan::GroupStrategy> groupby_override;
  uint64_t narrow_index_limit = SelectionVector::kDefaultNarrowLimit;
  buffer::BufferConfig memory;
  std::string backend = "vectorized";

  // Applies one key=value setting. Unknown keys and malformed values raise
  // InvalidArgument.
  void set(std::string_view key, std::string_view value);
  // key=value lines; blank lines and '#' comments are skipped.
  static EngineConfig parse(std::string_view text);
  static EngineConfig load(const std::string& path);

  size_t effective_workers() const;
};

// Byte counts with an optional K/M/G (or KiB/MiB/GiB) binary suffix.
uint64_t parse_bytes(std::string_view text);

enum class EngineTag { kNative, kFallback, kOracle };
std::string_view engine_tag_name(EngineTag t);

struct EngineUsed {
  EngineTag tag = EngineTag::kNative;
  std::optional<ErrorCode> reason;  // set iff tag == kFallback
  std::string message;
};

// Errors that abort the native attempt and reroute the query to the oracle.
bool is_fallback_trigger(ErrorCode code);

enum class EngineMode { kAuto, kNativeOnly, kOracleOnly };

struct RunOptions {
  EngineMode mode = EngineMode::kAuto;
  bool profile = false;
  // Records into a caller-owned profiler instead; no report is produced.
  exec::Profiler* profiler = nullptr;
};

struct QueryResult {
  Table table;
  EngineUsed used;
  std::optional<exec::ProfileReport> profile;
  exec::ExecStats stats;  // native attempt, possibly partial
};

// One engine instance: a catalog, a buffer manager holding the cached base
// tables, and the active kernel backend.
class Engine {
 public:
  explicit Engine(EngineConfig config = {});

  const EngineConfig& config() const { return config_; }
  buffer::BufferManager& buffers() { return buffers_; }
  const plan::Catalog& catalog() const { return catalog_; }

  // Registers and caches a table. A second table with the same name raises
  // InvalidArgument; CacheFull leaves the catalog unchanged.
  void load_table(const Table& t);
  bool has_table(const std::string& name) const { return catalog_.contains(name); }
  // UnknownEntry when absent.
  void drop_table(const std::string& name);

  // Parses, validates and runs a plan document with per-query fallback.
  QueryResult run(std::string_view document, const RunOptions& options = {});

  // Runs an already validated fragment root with received exchange inputs.
  QueryResult run_fragment(const plan::PhysicalPtr& root, const std::map<uint32_t, Table>& exchange_inputs,
                           const RunOptions& options = {});

 private:
  Table native(const plan::PhysicalPtr& root, const std::map<uint32_t, Table>& exchange_inputs,
               exec::Profiler* profiler, exec::ExecStats* stats);
  Table oracle(const plan::PhysicalNode& root, const std::map<uint32_t, Table>& exchange_inputs) const;

  EngineConfig config_;
  plan::Catalog catalog_;
  buffer::BufferManager buffers_;
  std::shared_ptr<const kernels::KernelBackend> backend_;
};

}  // namespace siriette::engine
