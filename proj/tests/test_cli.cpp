// End-to-end tests of the siriette executable, run as subprocesses.
#include <gtest/gtest.h>

#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "testing.hpp"

extern char** environ;

namespace {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

const std::string kBin = SIRIETTE_BIN;
const std::string kPlans = std::string(SIRIETTE_SOURCE_DIR) + "/plans/";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// A scratch directory per test, removed afterwards.
class Scratch {
 public:
  Scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("siriette-cli-" + std::to_string(::getpid()) + "-" + info->test_suite_name() + "-" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  const fs::path& dir() const { return dir_; }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
};

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

pid_t spawn(const std::vector<std::string>& args, const fs::path& out, const fs::path& err) {
  std::vector<std::string> full{kBin};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : full) argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, 1, out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&fa, 2, err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  pid_t pid = -1;
  int rc = posix_spawn(&pid, kBin.c_str(), &fa, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  if (rc != 0) throw std::runtime_error("posix_spawn failed");
  return pid;
}

int wait_exit(pid_t pid) {
  int status = 0;
  ::waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

Result run(const Scratch& s, std::vector<std::string> args) {
  static int counter = 0;
  auto out = s / ("out" + std::to_string(counter));
  auto err = s / ("err" + std::to_string(counter++));
  args.insert(args.begin(), {"--data-dir", (s / "data").string()});
  Result r;
  r.code = wait_exit(spawn(args, out, err));
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Generates SF 0.01 tables into the scratch data directory once per test.
void generate(const Scratch& s, double scale = 0.01, int seed = 1) {
  auto r = run(s, {"gen", (s / "gen").string(), "--scale", std::to_string(scale), "--seed", std::to_string(seed),
                   "--load"});
  ASSERT_EQ(r.code, 0) << r.err;
}

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint16_t free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// A `siriette serve` process, killed on destruction.
class Daemon {
 public:
  Daemon(const Scratch& s, int node, uint16_t coordinator_port, std::vector<std::string> extra = {}) : node_(node) {
    std::vector<std::string> args{"serve", "--node", std::to_string(node), "--coordinator",
                                  "127.0.0.1:" + std::to_string(coordinator_port)};
    args.insert(args.end(), extra.begin(), extra.end());
    out_ = s / ("daemon" + std::to_string(node) + ".out");
    pid_ = spawn(args, out_, s / ("daemon" + std::to_string(node) + ".err"));
  }
  ~Daemon() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      wait_exit(pid_);
    }
  }
  void kill_hard() {
    ::kill(pid_, SIGKILL);
    wait_exit(pid_);
    pid_ = -1;
  }
  int terminate() {
    ::kill(pid_, SIGTERM);
    int code = wait_exit(pid_);
    pid_ = -1;
    return code;
  }
  bool listening() const { return slurp(out_).find("listening on") != std::string::npos; }

 private:
  int node_;
  pid_t pid_ = -1;
  fs::path out_;
};

bool eventually(const std::function<bool()>& pred, std::chrono::milliseconds limit) {
  auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(20ms);
  }
  return pred();
}

const char* kSmallSchema = R"({"name":"t","columns":[
  {"name":"id","type":"INT64","nullable":false},
  {"name":"label","type":"STRING","nullable":true},
  {"name":"day","type":"DATE32","nullable":true}]})";

}  // namespace

// ------------------------------------------------------------------- load

TEST(CliLoad, ThreeRowsWithOneNull) {
  Scratch s;
  write_file(s / "t.csv", "1,a,1995-01-01\n2,,1995-01-02\n3,c,1995-01-03\n");
  write_file(s / "t.schema.json", kSmallSchema);
  auto r = run(s, {"load", (s / "t.csv").string(), (s / "t.schema.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("loaded t: 3 rows"), std::string::npos) << r.out;

  write_file(s / "read.json", R"({"catalog_ref":"x","root":{"kind":"read","table":"t","columns":[0,1]}})");
  auto q = run(s, {"run", (s / "read.json").string()});
  ASSERT_EQ(q.code, 0) << q.err;
  EXPECT_EQ(q.out, "1,a\n2,\n3,c\n");
}

TEST(CliLoad, MalformedDateReportsExactLocation) {
  Scratch s;
  write_file(s / "t.csv", "1,a,1995-01-01\n2,b,1995-13-02\n");
  write_file(s / "t.schema.json", kSmallSchema);
  auto r = run(s, {"load", (s / "t.csv").string(), (s / "t.schema.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ParseError: line 2, column 3"), std::string::npos) << r.err;
}

TEST(CliLoad, SecondLoadOfSameNameIsRejected) {
  Scratch s;
  write_file(s / "t.csv", "1,a,1995-01-01\n");
  write_file(s / "t.schema.json", kSmallSchema);
  ASSERT_EQ(run(s, {"load", (s / "t.csv").string(), (s / "t.schema.json").string()}).code, 0);
  auto r = run(s, {"load", (s / "t.csv").string(), (s / "t.schema.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("already loaded"), std::string::npos) << r.err;
}

TEST(CliLoad, GeneratedLineitemFitsTheDefaultCache) {
  Scratch s;
  ASSERT_EQ(run(s, {"gen", (s / "gen").string(), "--scale", "0.01"}).code, 0);
  auto r = run(s, {"load", (s / "gen" / "lineitem.csv").string(), (s / "gen" / "lineitem.schema.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  size_t rows = std::stoul(r.out.substr(r.out.find(": ") + 2));
  EXPECT_NEAR(static_cast<double>(rows), 60000.0, 600.0);
}

TEST(CliLoad, CacheBudgetIsEnforced) {
  Scratch s;
  ASSERT_EQ(run(s, {"gen", (s / "gen").string(), "--scale", "0.01"}).code, 0);
  auto r = run(s, {"--memory", "2MiB", "load", (s / "gen" / "lineitem.csv").string(),
                   (s / "gen" / "lineitem.schema.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("CacheFull"), std::string::npos) << r.err;
}

// -------------------------------------------------------------------- gen

TEST(CliGen, SameSeedGivesIdenticalBytes) {
  Scratch s;
  ASSERT_EQ(run(s, {"gen", (s / "a").string(), "--scale", "0.002", "--seed", "9"}).code, 0);
  ASSERT_EQ(run(s, {"gen", (s / "b").string(), "--scale", "0.002", "--seed", "9"}).code, 0);
  for (const char* t : {"customer", "orders", "lineitem"}) {
    EXPECT_EQ(slurp(s / "a" / (std::string(t) + ".csv")), slurp(s / "b" / (std::string(t) + ".csv"))) << t;
  }
}

TEST(CliGen, SeedChangeGivesDifferentBytesSameSchema) {
  Scratch s;
  ASSERT_EQ(run(s, {"gen", (s / "a").string(), "--scale", "0.002", "--seed", "1"}).code, 0);
  ASSERT_EQ(run(s, {"gen", (s / "b").string(), "--scale", "0.002", "--seed", "2"}).code, 0);
  for (const char* t : {"customer", "orders", "lineitem"}) {
    std::string n(t);
    EXPECT_NE(slurp(s / "a" / (n + ".csv")), slurp(s / "b" / (n + ".csv"))) << t;
    EXPECT_EQ(slurp(s / "a" / (n + ".schema.json")), slurp(s / "b" / (n + ".schema.json"))) << t;
  }
}

TEST(CliGen, RowCountsFollowTheScaleFormulas) {
  Scratch s;
  auto r = run(s, {"gen", (s / "g").string(), "--scale", "0.001"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("orders.csv: 1500 rows"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("customer.csv: 150 rows"), std::string::npos) << r.out;
}

TEST(CliGen, ScaleMustBePositive) {
  Scratch s;
  EXPECT_EQ(run(s, {"gen", (s / "g").string(), "--scale", "0"}).code, 1);
}

// Checksums computed by an independent FNV-1a implementation over the files of
// `gen --scale 0.001 --seed 1`. Changing them requires a generator version bump.
TEST(CliGen, ScaleOneThousandthChecksumsAreStable) {
  Scratch s;
  ASSERT_EQ(run(s, {"gen", (s / "g").string(), "--scale", "0.001", "--seed", "1"}).code, 0);
  const std::vector<std::pair<std::string, uint64_t>> frozen{
      {"customer.csv", 0x18f823053bb6eb37ull},        {"customer.schema.json", 0x44d6c5952a1e1f36ull},
      {"orders.csv", 0x727239a100623df0ull},          {"orders.schema.json", 0x77da79cfaa71b188ull},
      {"lineitem.csv", 0x89e5ca0d427880f8ull},        {"lineitem.schema.json", 0xf02c5849a3ef65ddull},
  };
  for (const auto& [file, sum] : frozen) EXPECT_EQ(fnv1a(slurp(s / "g" / file)), sum) << file;
}

// -------------------------------------------------------------------- run

TEST(CliRun, Q6NativeEqualsOracle) {
  Scratch s;
  generate(s);
  auto native = run(s, {"run", kPlans + "q6.json"});
  auto oracle = run(s, {"run", kPlans + "q6.json", "--engine", "oracle"});
  ASSERT_EQ(native.code, 0) << native.err;
  ASSERT_EQ(oracle.code, 0) << oracle.err;
  EXPECT_EQ(std::count(native.out.begin(), native.out.end(), '\n'), 1);
  EXPECT_EQ(native.out, oracle.out);
}

namespace {

double category_ms(const std::string& profile, const std::string& category) {
  auto at = profile.find("  " + category + ": ");
  if (at == std::string::npos) return -1;
  return std::stod(profile.substr(at + category.size() + 4));
}

}  // namespace

TEST(CliRun, ProfileAttributesJoinTimeOnlyToJoinPlans) {
  Scratch s;
  generate(s);
  auto q3 = run(s, {"run", kPlans + "q3.json", "--profile"});
  ASSERT_EQ(q3.code, 0) << q3.err;
  EXPECT_GT(category_ms(q3.err, "join"), 0.0) << q3.err;
  EXPECT_EQ(category_ms(q3.err, "exchange"), 0.0) << q3.err;

  auto q6 = run(s, {"run", kPlans + "q6.json", "--profile"});
  ASSERT_EQ(q6.code, 0) << q6.err;
  EXPECT_EQ(category_ms(q6.err, "join"), 0.0) << q6.err;
  EXPECT_EQ(category_ms(q6.err, "order-by"), 0.0) << q6.err;
  EXPECT_GT(category_ms(q6.err, "filter"), 0.0) << q6.err;
}

TEST(CliRun, MissingTableExitsWithUserError) {
  Scratch s;
  auto r = run(s, {"run", kPlans + "q6.json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("MissingTable"), std::string::npos) << r.err;
}

TEST(CliRun, MissingPlanFileAndBadFlagsAreUserErrors) {
  Scratch s;
  EXPECT_EQ(run(s, {"run", (s / "nope.json").string()}).code, 1);
  EXPECT_EQ(run(s, {"run", kPlans + "q6.json", "--engine", "gpu"}).code, 1);
  EXPECT_EQ(run(s, {"frobnicate"}).code, 1);
}

TEST(CliRun, FallbackStillExitsZero) {
  Scratch s;
  generate(s, 0.002);
  auto r = run(s, {"run", kPlans + "distinct_flags.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("reference executor"), std::string::npos) << r.err;
  auto o = run(s, {"run", kPlans + "distinct_flags.json", "--engine", "oracle"});
  EXPECT_EQ(r.out, o.out);
}

TEST(CliRun, RepeatedRunsAreByteIdentical) {
  Scratch s;
  generate(s);
  for (const char* plan : {"q1.json", "q3.json", "top_orders.json"}) {
    auto a = run(s, {"--workers", "4", "run", kPlans + plan});
    auto b = run(s, {"--workers", "4", "run", kPlans + plan});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << plan;
  }
}

TEST(CliRun, ConfigFileAndFlagsApply) {
  Scratch s;
  generate(s, 0.002);
  write_file(s / "engine.conf", "workers=2\nnarrow_index_limit=255\n");
  auto r = run(s, {"--config", (s / "engine.conf").string(), "run", kPlans + "q3.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("IndexOverflow"), std::string::npos) << r.err;
  EXPECT_EQ(r.out, run(s, {"run", kPlans + "q3.json"}).out);
  write_file(s / "bad.conf", "workers=many\n");
  EXPECT_EQ(run(s, {"--config", (s / "bad.conf").string(), "run", kPlans + "q3.json"}).code, 1);
}

// --------------------------------------------------------- serve/dist-run

TEST(CliDistRun, InProcessClusterMatchesSingleNode) {
  Scratch s;
  generate(s);
  auto single = run(s, {"run", kPlans + "q1.json"});
  for (const char* plan : {"q1_dist.json", "q1.json"}) {
    auto dist = run(s, {"dist-run", kPlans + plan, "--nodes", "4", "--profile"});
    ASSERT_EQ(dist.code, 0) << dist.err;
    EXPECT_EQ(dist.out, single.out) << plan;
  }
}

TEST(CliServe, FourDaemonsMatchSingleNodeQ1) {
  Scratch s;
  generate(s);
  auto port = free_port();
  std::vector<std::unique_ptr<Daemon>> daemons;
  for (int i = 1; i <= 4; ++i) daemons.push_back(std::make_unique<Daemon>(s, i, port));
  ASSERT_TRUE(eventually([&] { return std::all_of(daemons.begin(), daemons.end(), [](auto& d) { return d->listening(); }); }, 10s));

  auto dist = run(s, {"dist-run", kPlans + "q1_dist.json", "--listen", "127.0.0.1:" + std::to_string(port),
                      "--expect", "4", "--wait-ms", "20000", "--profile"});
  ASSERT_EQ(dist.code, 0) << dist.err;
  EXPECT_NE(dist.err.find("nodes 5"), std::string::npos) << dist.err;
  EXPECT_EQ(dist.out, run(s, {"run", kPlans + "q1.json"}).out);

  // SIGTERM is a clean shutdown.
  EXPECT_EQ(daemons[0]->terminate(), 0);
}

TEST(CliServe, KilledDaemonIsReportedAndRestartRejoins) {
  Scratch s;
  generate(s);
  auto port = free_port();
  auto coord = "127.0.0.1:" + std::to_string(port);
  std::vector<std::unique_ptr<Daemon>> daemons;
  daemons.push_back(std::make_unique<Daemon>(s, 1, port));
  daemons.push_back(std::make_unique<Daemon>(s, 2, port, std::vector<std::string>{"--start-delay-ms", "5000"}));
  daemons.push_back(std::make_unique<Daemon>(s, 3, port));

  // Debug logging exposes the dispatch, so the kill lands mid-query.
  ::setenv("SIRIETTE_LOG", "debug", 1);
  auto out = s / "dist.out";
  auto err = s / "dist.err";
  auto start = std::chrono::steady_clock::now();
  pid_t pid = spawn({"--data-dir", (s / "data").string(), "dist-run", kPlans + "q3_shuffle.json", "--listen", coord,
                     "--expect", "3", "--wait-ms", "20000", "--heartbeat-timeout-ms", "1000"},
                    out, err);
  ::unsetenv("SIRIETTE_LOG");
  ASSERT_TRUE(eventually([&] { return slurp(err).find("fragment 0 -> nodes") != std::string::npos; }, 20s));
  daemons[1]->kill_hard();
  int code = wait_exit(pid);
  auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_NE(code, 0);
  EXPECT_NE(slurp(err).find("NodeLost"), std::string::npos) << slurp(err);
  EXPECT_LT(elapsed, 20s);

  daemons[1] = std::make_unique<Daemon>(s, 2, port);
  auto again = run(s, {"dist-run", kPlans + "q3_shuffle.json", "--listen", coord, "--expect", "3", "--wait-ms",
                       "20000"});
  ASSERT_EQ(again.code, 0) << again.err;
  std::string why;
  auto single = run(s, {"run", kPlans + "q3_shuffle.json"});
  auto sorted = [](std::string text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    for (std::string l; std::getline(ss, l);) lines.push_back(l);
    std::sort(lines.begin(), lines.end());
    return lines;
  };
  EXPECT_EQ(sorted(again.out), sorted(single.out));
}

TEST(CliServe, BindErrorAndUnreachableCoordinator) {
  Scratch s;
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
  ::listen(fd, 1);
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  auto taken = "127.0.0.1:" + std::to_string(ntohs(addr.sin_port));
  auto bound = run(s, {"serve", "--node", "1", "--listen", taken});
  EXPECT_EQ(bound.code, 1);
  EXPECT_NE(bound.err.find("BindError"), std::string::npos) << bound.err;
  ::close(fd);

  auto lonely = run(s, {"serve", "--node", "1", "--coordinator", "127.0.0.1:" + std::to_string(free_port()),
                        "--join-timeout-ms", "300"});
  EXPECT_EQ(lonely.code, 1);
  EXPECT_NE(lonely.err.find("CoordinatorUnreachable"), std::string::npos) << lonely.err;
}

// ------------------------------------------------------------------ bench

TEST(CliBench, ReportsOneColdAndRepeatedHotRuns) {
  Scratch s;
  generate(s, 0.002);
  fs::create_directories(s / "plans");
  for (const char* p : {"q1.json", "q3.json", "q6.json", "distinct_flags.json"}) {
    fs::copy_file(kPlans + p, s / "plans" / p);
  }
  write_file(s / "plans" / "broken.json", R"({"catalog_ref":"x","root":{"kind":"read","table":"nation","columns":[0]}})");
  auto report = s / "report.json";
  auto r = run(s, {"bench", (s / "plans").string(), "--repetitions", "3", "--report", report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("broken"), std::string::npos);

  auto j = nlohmann::json::parse(slurp(report));
  ASSERT_EQ(j["queries"].size(), 5u);
  for (const auto& q : j["queries"]) {
    SCOPED_TRACE(q["query"].get<std::string>());
    if (q["query"] == "broken") {
      EXPECT_EQ(q["status"], "failed");
      EXPECT_NE(q["error"].get<std::string>().find("MissingTable"), std::string::npos);
      continue;
    }
    EXPECT_EQ(q["status"], "ok");
    EXPECT_TRUE(q["cold_ms"].is_number());
    EXPECT_EQ(q["hot_ms"].size(), 3u);
    for (const char* phase : {"cold", "hot_median"}) {
      const auto& b = q[phase];
      double cats = 0;
      for (const auto& [k, v] : b["categories"].items()) cats += v.get<double>();
      EXPECT_LE(cats, b["total_ms"].get<double>() * (1 + 1e-9) + 1e-6);
      EXPECT_NEAR(b["compute_ms"].get<double>() + b["exchange_ms"].get<double>() + b["other_ms"].get<double>(),
                  b["total_ms"].get<double>(), 1e-6);
    }
  }
}

TEST(CliBench, HotMedianNotSlowerThanColdAtScaleTenth) {
  constexpr double kSlack = 1.10;
  Scratch s;
  fs::create_directories(s / "plans");
  for (const char* p : {"q1.json", "q6.json"}) fs::copy_file(kPlans + p, s / "plans" / p);
  auto report = s / "report.json";
  auto r = run(s, {"bench", (s / "plans").string(), "--scale", "0.1", "--repetitions", "3", "--report",
                   report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(slurp(report));
  ASSERT_EQ(j["queries"].size(), 2u);
  for (const auto& q : j["queries"]) {
    SCOPED_TRACE(q["query"].get<std::string>());
    ASSERT_EQ(q["status"], "ok");
    EXPECT_LE(q["hot_median_ms"].get<double>(), q["cold_ms"].get<double>() * kSlack);
  }
}
