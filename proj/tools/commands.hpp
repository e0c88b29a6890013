#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "siriette/engine/engine.hpp"

namespace siriette::cli {

struct GlobalOptions {
  std::filesystem::path data_dir;
  std::string config_file;
  std::optional<size_t> workers;
  std::optional<std::string> memory;

  engine::EngineConfig engine_config() const;
};

struct LoadArgs {
  std::string csv;
  std::string schema;
  std::string name;
  bool header = false;
};

struct GenArgs {
  std::string out_dir;
  double scale = 0.01;
  uint64_t seed = 1;
  bool load = false;
};

struct RunArgs {
  std::string plan;
  bool profile = false;
  std::string engine = "native";
  bool header = false;
};

struct ServeArgs {
  uint16_t node = 1;
  std::string listen = "127.0.0.1:0";
  std::string coordinator = "127.0.0.1:7400";
  int join_timeout_ms = 30000;
  int start_delay_ms = 0;
};

struct DistRunArgs {
  std::string plan;
  size_t nodes = 4;
  std::string listen;  // set: coordinate TCP daemons instead of an in-process cluster
  size_t expect = 0;
  int wait_ms = 30000;
  int heartbeat_timeout_ms = 2000;
  bool profile = false;
  bool header = false;
};

struct BenchArgs {
  std::string plan_dir;
  size_t repetitions = 3;
  std::string report = "bench_report.json";
  std::optional<double> scale;  // generate in memory instead of reading the data directory
  uint64_t seed = 1;
};

// Each command writes results to `out` and diagnostics to `err`. Errors are
// raised as siriette::Error.
void cmd_load(const GlobalOptions& g, const LoadArgs& a, std::ostream& out);
void cmd_gen(const GlobalOptions& g, const GenArgs& a, std::ostream& out);
void cmd_run(const GlobalOptions& g, const RunArgs& a, std::ostream& out, std::ostream& err);
void cmd_serve(const GlobalOptions& g, const ServeArgs& a, std::ostream& out);
void cmd_dist_run(const GlobalOptions& g, const DistRunArgs& a, std::ostream& out, std::ostream& err);
void cmd_bench(const GlobalOptions& g, const BenchArgs& a, std::ostream& out);

// "host:port"; InvalidArgument when malformed.
std::pair<std::string, uint16_t> parse_address(const std::string& text);

}  // namespace siriette::cli
