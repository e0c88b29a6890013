#include "siriette/engine/engine.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include "siriette/common/error.hpp"
#include "siriette/common/log.hpp"
#include "siriette/oracle/oracle.hpp"
#include "siriette/oracle/reference_backend.hpp"
#include "siriette/plan/document.hpp"
#include "siriette/plan/validate.hpp"

namespace siriette::engine {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

uint64_t parse_count(std::string_view key, std::string_view value) {
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    raise(ErrorCode::kInvalidArgument, "config '" + std::string(key) + "': not a count: '" + std::string(value) + "'");
  }
  return v;
}

}  // namespace

uint64_t parse_bytes(std::string_view text) {
  text = trim(text);
  size_t digits = 0;
  while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits]))) ++digits;
  if (digits == 0) raise(ErrorCode::kInvalidArgument, "not a byte count: '" + std::string(text) + "'");
  uint64_t v = parse_count("bytes", text.substr(0, digits));
  std::string suffix(trim(text.substr(digits)));
  std::transform(suffix.begin(), suffix.end(), suffix.begin(), [](unsigned char c) { return std::toupper(c); });
  int shift = 0;
  if (suffix.empty() || suffix == "B") {
    shift = 0;
  } else if (suffix == "K" || suffix == "KIB" || suffix == "KB") {
    shift = 10;
  } else if (suffix == "M" || suffix == "MIB" || suffix == "MB") {
    shift = 20;
  } else if (suffix == "G" || suffix == "GIB" || suffix == "GB") {
    shift = 30;
  } else {
    raise(ErrorCode::kInvalidArgument, "unknown byte suffix in '" + std::string(text) + "'");
  }
  if (shift > 0 && v > (UINT64_MAX >> shift)) raise(ErrorCode::kInvalidArgument, "byte count too large");
  return v << shift;
}

void EngineConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "workers") {
    workers = parse_count(key, value);
  } else if (key == "batch_size_rows") {
    batch_size_rows = parse_count(key, value);
    if (batch_size_rows == 0) raise(ErrorCode::kInvalidArgument, "batch_size_rows must be positive");
  } else if (key == "groupby_strategy_override") {
    if (value == "hash") {
      groupby_override = plan::GroupStrategy::kHash;
    } else if (value == "sort") {
      groupby_override = plan::GroupStrategy::kSort;
    } else if (value == "none" || value.empty()) {
      groupby_override.reset();
    } else {
      raise(ErrorCode::kInvalidArgument, "groupby_strategy_override must be hash, sort or none");
    }
  } else if (key == "narrow_index_limit") {
    narrow_index_limit = parse_count(key, value);
  } else if (key == "memory_total_bytes") {
    memory = buffer::BufferConfig::split(parse_bytes(value));
  } else if (key == "caching_bytes") {
    memory.caching_bytes = parse_bytes(value);
  } else if (key == "processing_bytes") {
    memory.processing_bytes = parse_bytes(value);
  } else if (key == "backend") {
    backend = std::string(value);
  } else {
    raise(ErrorCode::kInvalidArgument, "unknown config key '" + std::string(key) + "'");
  }
}

EngineConfig EngineConfig::parse(std::string_view text) {
  EngineConfig c;
  // memory_total_bytes is applied first so explicit region sizes override the split.
  std::vector<std::pair<std::string, std::string>> regions;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      raise(ErrorCode::kInvalidArgument, "config line " + std::to_string(lineno) + ": expected key=value");
    }
    auto key = trim(s.substr(0, eq));
    auto value = s.substr(eq + 1);
    if (key == "caching_bytes" || key == "processing_bytes") {
      regions.emplace_back(key, value);
    } else {
      c.set(key, value);
    }
  }
  for (const auto& [k, v] : regions) c.set(k, v);
  return c;
}

EngineConfig EngineConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorCode::kInvalidArgument, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

size_t EngineConfig::effective_workers() const {
  if (workers > 0) return workers;
  return std::max<size_t>(1, std::thread::hardware_concurrency());
}

std::string_view engine_tag_name(EngineTag t) {
  switch (t) {
    case EngineTag::kNative: return "native";
    case EngineTag::kFallback: return "fallback";
    case EngineTag::kOracle: return "oracle";
  }
  return "?";
}

bool is_fallback_trigger(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownRelation:
    case ErrorCode::kUnsupportedFeature:
    case ErrorCode::kIndexOverflow:
    case ErrorCode::kProcessingExhausted:
    case ErrorCode::kCacheFull:
      return true;
    default:
      return false;
  }
}

Engine::Engine(EngineConfig config) : config_(std::move(config)), buffers_(config_.memory) {
  if (config_.backend == "reference") oracle::register_reference_backend();
  backend_ = kernels::make_backend(config_.backend);
}

void Engine::load_table(const Table& t) {
  if (catalog_.contains(t.name())) raise(ErrorCode::kInvalidArgument, "table '" + t.name() + "' is already loaded");
  buffers_.cache_table(t);
  try {
    catalog_.add({t.name(), t.schema()});
  } catch (...) {
    buffers_.drop_table(t.name());
    throw;
  }
}

void Engine::drop_table(const std::string& name) {
  if (!catalog_.contains(name)) raise(ErrorCode::kUnknownEntry, "table '" + name + "' is not loaded");
  buffers_.drop_table(name);
  catalog_.remove(name);
}

Table Engine::native(const plan::PhysicalPtr& root, const std::map<uint32_t, Table>& exchange_inputs,
                     exec::Profiler* profiler, exec::ExecStats* stats) {
  auto dag = exec::build_pipelines(root);
  exec::ExecOptions o;
  o.workers = config_.effective_workers();
  o.batch_size_rows = config_.batch_size_rows;
  o.narrow_index_limit = config_.narrow_index_limit;
  o.backend = backend_;
  exec::ExecContext ctx(o, {&buffers_, exchange_inputs}, profiler);
  try {
    auto t = exec::execute(dag, ctx);
    *stats = ctx.stats();
    return t;
  } catch (...) {
    *stats = ctx.stats();
    throw;
  }
}

Table Engine::oracle(const plan::PhysicalNode& root, const std::map<uint32_t, Table>& exchange_inputs) const {
  oracle::OracleInputs in;
  in.tables = [this](const std::string& name) -> const Table& {
    auto entry = buffers_.find(name);
    if (!entry) raise(ErrorCode::kMissingTable, "table '" + name + "' is not loaded");
    return entry->table;
  };
  in.exchange_sources = exchange_inputs;
  return oracle::oracle_execute(root, in);
}

QueryResult Engine::run(std::string_view document, const RunOptions& options) {
  QueryResult r;
  exec::Profiler own;
  exec::Profiler* prof = options.profiler ? options.profiler : (options.profile ? &own : nullptr);
  own.begin();
  plan::ValidateOptions vopts{config_.groupby_override};

  auto fall_back = [&](EngineTag tag, std::optional<ErrorCode> reason, std::string message) {
    auto p = plan::validate_plan(plan::parse_plan(document, plan::all_relations()), catalog_, vopts);
    r.table = oracle(*p.root, {});
    r.used = {tag, reason, std::move(message)};
  };

  if (options.mode == EngineMode::kOracleOnly) {
    fall_back(EngineTag::kOracle, std::nullopt, "");
  } else {
    try {
      auto p = plan::validate_plan(plan::parse_plan(document), catalog_, vopts);
      r.table = native(p.root, {}, prof, &r.stats);
      r.used = {EngineTag::kNative, std::nullopt, ""};
    } catch (const Error& e) {
      if (options.mode == EngineMode::kNativeOnly || !is_fallback_trigger(e.code())) throw;
      spdlog::info("falling back to the reference executor: {}", e.what());
      fall_back(EngineTag::kFallback, e.code(), e.what());
    }
  }
  own.end();
  if (options.profile && !options.profiler) r.profile = own.report();
  return r;
}

QueryResult Engine::run_fragment(const plan::PhysicalPtr& root, const std::map<uint32_t, Table>& exchange_inputs,
                                 const RunOptions& options) {
  QueryResult r;
  exec::Profiler own;
  exec::Profiler* prof = options.profiler ? options.profiler : (options.profile ? &own : nullptr);
  own.begin();
  if (options.mode == EngineMode::kOracleOnly) {
    r.table = oracle(*root, exchange_inputs);
    r.used = {EngineTag::kOracle, std::nullopt, ""};
  } else {
    try {
      r.table = native(root, exchange_inputs, prof, &r.stats);
      r.used = {EngineTag::kNative, std::nullopt, ""};
    } catch (const Error& e) {
      if (options.mode == EngineMode::kNativeOnly || !is_fallback_trigger(e.code())) throw;
      spdlog::info("fragment falling back to the reference executor: {}", e.what());
      r.table = oracle(*root, exchange_inputs);
      r.used = {EngineTag::kFallback, e.code(), e.what()};
    }
  }
  own.end();
  if (options.profile && !options.profiler) r.profile = own.report();
  return r;
}

}  // namespace siriette::engine
