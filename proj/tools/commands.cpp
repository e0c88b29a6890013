#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "siriette/columnar/csv.hpp"
#include "siriette/common/error.hpp"
#include "siriette/common/log.hpp"
#include "siriette/coordinator/coordinator.hpp"
#include "siriette/datagen/datagen.hpp"
#include "store.hpp"

namespace siriette::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kInvalidArgument, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double ms(int64_t ns) { return static_cast<double>(ns) / 1e6; }

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::unique_ptr<engine::Engine> engine_with(const GlobalOptions& g, const std::set<std::string>& tables,
                                            const DataStore& store) {
  auto e = std::make_unique<engine::Engine>(g.engine_config());
  for (const auto& name : tables) {
    if (!store.contains(name)) continue;  // surfaces as MissingTable during validation
    e->load_table(store.load(name));
  }
  return e;
}

void print_fallback(const engine::EngineUsed& used, std::ostream& err) {
  if (used.tag == engine::EngineTag::kFallback) {
    err << "note: executed by the reference executor after "
        << (used.reason ? error_code_name(*used.reason) : std::string_view("an error")) << "\n";
  }
}

nlohmann::ordered_json breakdown_json(const exec::ProfileReport& r) {
  nlohmann::ordered_json j;
  j["total_ms"] = ms(r.total_ns);
  j["compute_ms"] = ms(r.compute_ns);
  j["exchange_ms"] = ms(r.exchange_ns);
  j["other_ms"] = ms(r.other_ns);
  nlohmann::ordered_json cats;
  for (size_t c = 0; c < exec::kCategoryCount; ++c) {
    cats[std::string(exec::category_name(static_cast<exec::Category>(c)))] = ms(r.category_ns[c]);
  }
  j["categories"] = cats;
  return j;
}

coordinator::CoordinatorOptions coordinator_options(int heartbeat_timeout_ms) {
  coordinator::CoordinatorOptions o;
  o.heartbeat_timeout = exchange::Millis(heartbeat_timeout_ms);
  o.heartbeat_interval = std::min(exchange::Millis(100), o.heartbeat_timeout / 5);
  return o;
}

}  // namespace

engine::EngineConfig GlobalOptions::engine_config() const {
  engine::EngineConfig c;
  if (!config_file.empty()) c = engine::EngineConfig::load(config_file);
  if (memory) c.set("memory_total_bytes", *memory);
  if (workers) c.workers = *workers;
  return c;
}

std::pair<std::string, uint16_t> parse_address(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    raise(ErrorCode::kInvalidArgument, "expected HOST:PORT, got '" + text + "'");
  }
  int port = 0;
  try {
    size_t used = 0;
    port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    raise(ErrorCode::kInvalidArgument, "bad port in '" + text + "'");
  }
  if (port < 0 || port > 65535) raise(ErrorCode::kInvalidArgument, "port out of range in '" + text + "'");
  return {text.substr(0, colon), static_cast<uint16_t>(port)};
}

void cmd_load(const GlobalOptions& g, const LoadArgs& a, std::ostream& out) {
  DataStore store(g.data_dir);
  if (!fs::exists(a.csv)) raise(ErrorCode::kInvalidArgument, "no such file '" + a.csv + "'");
  if (!fs::exists(a.schema)) raise(ErrorCode::kInvalidArgument, "no such file '" + a.schema + "'");
  auto schema = read_schema_file(a.schema);
  std::string name = a.name.empty() ? schema.name : a.name;
  if (name.empty()) raise(ErrorCode::kInvalidArgument, "no table name given and none in the schema file");
  if (store.contains(name)) raise(ErrorCode::kInvalidArgument, "table '" + name + "' is already loaded");
  auto table = read_csv_file(a.csv, name, schema.schema, {a.header});
  // Caching through an engine enforces the configured cache budget.
  engine::Engine e(g.engine_config());
  e.load_table(table);
  store.save(table);
  out << "loaded " << name << ": " << table.num_rows() << " rows, " << table.byte_size() << " bytes cached\n";
}

void cmd_gen(const GlobalOptions& g, const GenArgs& a, std::ostream& out) {
  if (!(a.scale > 0)) raise(ErrorCode::kInvalidArgument, "scale must be positive");
  auto gen = datagen::generate({a.seed, a.scale});
  datagen::write_tables(gen, a.out_dir);
  for (const auto* t : {&gen.customer, &gen.orders, &gen.lineitem}) {
    out << "wrote " << (fs::path(a.out_dir) / (t->name() + ".csv")).string() << ": " << t->num_rows() << " rows\n";
  }
  if (a.load) {
    DataStore store(g.data_dir);
    for (const auto* t : {&gen.customer, &gen.orders, &gen.lineitem}) {
      store.save(*t);
      out << "loaded " << t->name() << ": " << t->num_rows() << " rows, " << t->byte_size() << " bytes cached\n";
    }
  }
}

void cmd_run(const GlobalOptions& g, const RunArgs& a, std::ostream& out, std::ostream& err) {
  auto doc = read_text(a.plan);
  engine::RunOptions ro;
  if (a.engine == "oracle") {
    ro.mode = engine::EngineMode::kOracleOnly;
  } else if (a.engine != "native") {
    raise(ErrorCode::kInvalidArgument, "--engine must be native or oracle");
  }
  ro.profile = a.profile;
  DataStore store(g.data_dir);
  auto e = engine_with(g, referenced_tables(doc), store);
  auto r = e->run(doc, ro);
  write_csv(out, r.table, a.header);
  print_fallback(r.used, err);
  if (a.profile && r.profile) err << r.profile->to_text();
}

void cmd_serve(const GlobalOptions& g, const ServeArgs& a, std::ostream& out) {
  auto [host, port] = parse_address(a.listen);
  auto [chost, cport] = parse_address(a.coordinator);
  if (a.node == 0) raise(ErrorCode::kInvalidArgument, "node id 0 is reserved for the coordinator");
  auto transport = std::make_shared<exchange::TcpTransport>(a.node, host, port);
  transport->add_peer(0, chost, cport);
  coordinator::NodeOptions opts;
  opts.engine = g.engine_config();
  coordinator::NodeRuntime node(transport, opts);
  node.set_start_delay(exchange::Millis(a.start_delay_ms));
  out << "node " << a.node << " listening on " << host << ":" << transport->port() << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  coordinator::ControlMessage join;
  join.type = coordinator::MessageType::kJoin;
  join.node = a.node;
  join.join = coordinator::NodeAddress{a.node, host, transport->port()};

  auto started = Clock::now();
  bool ever_joined = false;
  auto last_join = Clock::time_point{};
  while (!g_stop) {
    auto quiet = Clock::now() - std::max(node.last_contact(), last_join);
    if (quiet > 1s) {
      try {
        node.send(0, join);
        if (!ever_joined) spdlog::info("node {}: joined coordinator at {}", a.node, a.coordinator);
        ever_joined = true;
      } catch (const Error& e) {
        spdlog::debug("node {}: join failed: {}", a.node, e.what());
        if (!ever_joined && Clock::now() - started > std::chrono::milliseconds(a.join_timeout_ms)) {
          raise(ErrorCode::kCoordinatorUnreachable, "no coordinator at " + a.coordinator);
        }
      }
      last_join = Clock::now();
    }
    std::this_thread::sleep_for(50ms);
  }
  node.stop();
}

void cmd_dist_run(const GlobalOptions& g, const DistRunArgs& a, std::ostream& out, std::ostream& err) {
  auto doc = read_text(a.plan);
  DataStore store(g.data_dir);
  auto tables = referenced_tables(doc);
  coordinator::NodeOptions nopts;
  nopts.engine = g.engine_config();
  auto copts = coordinator_options(a.heartbeat_timeout_ms);

  auto execute = [&](coordinator::Coordinator& c) {
    for (const auto& name : tables) {
      if (store.contains(name)) c.load_table(store.load(name));
    }
    coordinator::QueryExecution e;
    auto result = c.run(doc, &e);
    write_csv(out, result, a.header);
    if (e.fallback_used) err << "note: some fragments were executed by the reference executor\n";
    if (a.profile) {
      auto t = c.timing_report(e);
      err << "nodes " << e.nodes.size() << ", fragments " << e.fragments.fragments.size() << ", instances "
          << e.instances() << "\n"
          << t.detail.to_text();
    }
  };

  if (a.listen.empty()) {
    if (a.nodes == 0) raise(ErrorCode::kInvalidArgument, "--nodes must be at least 1");
    coordinator::LocalCluster cluster(a.nodes, nopts, copts);
    execute(cluster.coordinator());
    return;
  }

  auto [host, port] = parse_address(a.listen);
  auto transport = std::make_shared<exchange::TcpTransport>(0, host, port);
  coordinator::NodeRuntime local(transport, nopts);
  coordinator::Coordinator coord(local, copts);
  coord.start_heartbeats();
  spdlog::info("coordinator listening on {}:{}, waiting for {} node(s)", host, transport->port(), a.expect);
  auto deadline = Clock::now() + std::chrono::milliseconds(a.wait_ms);
  while (coord.membership().alive().size() < a.expect + 1) {
    if (Clock::now() > deadline) {
      raise(ErrorCode::kNoAliveNodes, std::to_string(coord.membership().alive().size() - 1) + " of " +
                                          std::to_string(a.expect) + " nodes joined");
    }
    std::this_thread::sleep_for(20ms);
  }
  execute(coord);
  coord.stop();
  local.stop();
}

void cmd_bench(const GlobalOptions& g, const BenchArgs& a, std::ostream& out) {
  if (!fs::is_directory(a.plan_dir)) raise(ErrorCode::kInvalidArgument, "no such directory '" + a.plan_dir + "'");
  std::vector<fs::path> plans;
  for (const auto& entry : fs::directory_iterator(a.plan_dir)) {
    if (entry.path().extension() == ".json") plans.push_back(entry.path());
  }
  std::sort(plans.begin(), plans.end());

  std::map<std::string, Table> generated;
  if (a.scale) {
    auto gen = datagen::generate({a.seed, *a.scale});
    for (auto* t : {&gen.customer, &gen.orders, &gen.lineitem}) generated.emplace(t->name(), *t);
  }
  DataStore store(g.data_dir);
  auto source = [&](const std::string& name) -> std::optional<Table> {
    if (a.scale) {
      auto it = generated.find(name);
      if (it == generated.end()) return std::nullopt;
      return it->second;
    }
    if (!store.contains(name)) return std::nullopt;
    return store.load(name);
  };

  nlohmann::ordered_json report;
  report["repetitions"] = a.repetitions;
  report["workers"] = g.engine_config().effective_workers();
  report["queries"] = nlohmann::ordered_json::array();

  out << std::left << std::setw(24) << "query" << std::right << std::setw(12) << "cold ms" << std::setw(12)
      << "hot ms" << std::setw(12) << "compute" << std::setw(12) << "exchange" << std::setw(12) << "other"
      << "  engine\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& path : plans) {
    auto name = path.stem().string();
    nlohmann::ordered_json q;
    q["query"] = name;
    try {
      auto doc = read_text(path.string());
      std::vector<Table> inputs;
      for (const auto& t : referenced_tables(doc)) {
        if (auto table = source(t)) inputs.push_back(std::move(*table));
      }
      engine::Engine e(g.engine_config());
      engine::RunOptions ro;
      ro.profile = true;

      auto cold_start = Clock::now();
      for (const auto& t : inputs) e.load_table(t);
      auto cold = e.run(doc, ro);
      double cold_ms = elapsed_ms(cold_start);

      std::vector<std::pair<double, exec::ProfileReport>> hot;
      std::string used(engine::engine_tag_name(cold.used.tag));
      for (size_t i = 0; i < a.repetitions; ++i) {
        auto start = Clock::now();
        auto r = e.run(doc, ro);
        hot.emplace_back(elapsed_ms(start), *r.profile);
        if (r.used.tag != engine::EngineTag::kNative) used = engine::engine_tag_name(r.used.tag);
      }
      std::vector<double> hot_ms;
      for (const auto& [t, p] : hot) hot_ms.push_back(t);
      auto sorted = hot;
      std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      q["status"] = "ok";
      q["engine"] = used;
      q["cold_ms"] = cold_ms;
      q["cold"] = breakdown_json(*cold.profile);
      q["hot_ms"] = hot_ms;
      if (!sorted.empty()) {
        const auto& [median_ms, median] = sorted[(sorted.size() - 1) / 2];
        q["hot_median_ms"] = median_ms;
        q["hot_median"] = breakdown_json(median);
        out << std::left << std::setw(24) << name << std::right << std::setw(12) << cold_ms << std::setw(12)
            << median_ms << std::setw(12) << ms(median.compute_ns) << std::setw(12) << ms(median.exchange_ns)
            << std::setw(12) << ms(median.other_ns) << "  " << used << "\n";
      } else {
        out << std::left << std::setw(24) << name << std::right << std::setw(12) << cold_ms << std::setw(12) << "-"
            << "\n";
      }
    } catch (const Error& err) {
      q["status"] = "failed";
      q["error"] = err.what();
      out << std::left << std::setw(24) << name << "  FAILED: " << err.what() << "\n";
    }
    report["queries"].push_back(q);
  }
  std::ofstream f(a.report);
  if (!f) raise(ErrorCode::kInvalidArgument, "cannot write report '" + a.report + "'");
  f << report.dump(2) << "\n";
  out << "report written to " << a.report << "\n";
}

}  // namespace siriette::cli
