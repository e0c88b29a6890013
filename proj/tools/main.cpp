#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "siriette/common/error.hpp"
#include "siriette/common/log.hpp"
#include "store.hpp"

using namespace siriette;
using namespace siriette::cli;

namespace {

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

}  // namespace

int main(int argc, char** argv) {
  init_logging();

  CLI::App app{"siriette: a columnar query engine consuming plan documents"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::string data_dir;
  size_t workers = 0;
  std::string memory;
  app.add_option("--data-dir", data_dir, "Table storage directory (default $SIRIETTE_DATA or ./siriette-data)");
  app.add_option("--config", g.config_file, "key=value configuration file")->check(CLI::ExistingFile);
  auto* workers_opt = app.add_option("--workers", workers, "Worker threads (0: hardware concurrency)");
  auto* memory_opt = app.add_option("--memory", memory, "Total buffer memory, e.g. 1G or 512MiB");

  LoadArgs load;
  auto* c_load = app.add_subcommand("load", "Parse a CSV file and cache it as a table");
  c_load->add_option("csv", load.csv, "CSV file")->required();
  c_load->add_option("schema", load.schema, "Schema JSON file")->required();
  c_load->add_option("name", load.name, "Table name (default: the schema's name)");
  c_load->add_flag("--header", load.header, "The CSV starts with a header line");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate TPC-H-shaped tables as CSV");
  c_gen->add_option("out", gen.out_dir, "Output directory")->required();
  c_gen->add_option("--scale", gen.scale, "Scale factor");
  c_gen->add_option("--seed", gen.seed, "Generator seed");
  c_gen->add_flag("--load", gen.load, "Also store the generated tables in the data directory");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run a plan document on one node");
  c_run->add_option("plan", run.plan, "Plan document")->required();
  c_run->add_flag("--profile", run.profile, "Print the per-category time breakdown to stderr");
  c_run->add_option("--engine", run.engine, "native (with fallback) or oracle")
      ->check(CLI::IsMember({"native", "oracle"}));
  c_run->add_flag("--header", run.header, "Print a header line");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Run a node daemon");
  c_serve->add_option("--node", serve.node, "Node id (1..65535)")->required();
  c_serve->add_option("--listen", serve.listen, "Listen address HOST:PORT");
  c_serve->add_option("--coordinator", serve.coordinator, "Coordinator address HOST:PORT");
  c_serve->add_option("--join-timeout-ms", serve.join_timeout_ms, "Give up when no coordinator answers this long");
  c_serve->add_option("--start-delay-ms", serve.start_delay_ms, "Delay each query start (simulates a slow node)");

  DistRunArgs dist;
  auto* c_dist = app.add_subcommand("dist-run", "Run a plan document across nodes");
  c_dist->add_option("plan", dist.plan, "Plan document")->required();
  c_dist->add_option("--nodes", dist.nodes, "In-process cluster size");
  c_dist->add_option("--listen", dist.listen, "Coordinate TCP daemons from this address instead");
  c_dist->add_option("--expect", dist.expect, "Daemons to wait for with --listen");
  c_dist->add_option("--wait-ms", dist.wait_ms, "How long to wait for daemons");
  c_dist->add_option("--heartbeat-timeout-ms", dist.heartbeat_timeout_ms, "Declare a silent node dead after this");
  c_dist->add_flag("--profile", dist.profile, "Print the compute/exchange/other breakdown to stderr");
  c_dist->add_flag("--header", dist.header, "Print a header line");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Time every plan in a directory");
  c_bench->add_option("plans", bench.plan_dir, "Directory of plan documents")->required();
  c_bench->add_option("--repetitions", bench.repetitions, "Hot runs per query");
  c_bench->add_option("--report", bench.report, "Machine-readable report file");
  c_bench->add_option("--scale", bench.scale, "Generate tables in memory at this scale");
  c_bench->add_option("--seed", bench.seed, "Generator seed with --scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUserError;
  }

  g.data_dir = data_dir.empty() ? default_data_dir() : std::filesystem::path(data_dir);
  if (*workers_opt) g.workers = workers;
  if (*memory_opt) g.memory = memory;

  try {
    if (*c_load) cmd_load(g, load, std::cout);
    if (*c_gen) cmd_gen(g, gen, std::cout);
    if (*c_run) cmd_run(g, run, std::cout, std::cerr);
    if (*c_serve) cmd_serve(g, serve, std::cout);
    if (*c_dist) cmd_dist_run(g, dist, std::cout, std::cerr);
    if (*c_bench) cmd_bench(g, bench, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_user_error(e.code()) ? kUserError : kInternalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  std::cout.flush();
  return 0;
}
