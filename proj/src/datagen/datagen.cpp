#include "siriette/datagen/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "siriette/columnar/csv.hpp"

namespace siriette::datagen {

namespace {

constexpr const char* kSegments[] = {"AUTOMOBILE", "BUILDING", "FURNITURE", "HOUSEHOLD", "MACHINERY"};
constexpr const char* kPriorities[] = {"1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED", "5-LOW"};
constexpr const char* kInstructs[] = {"DELIVER IN PERSON", "COLLECT COD", "NONE", "TAKE BACK RETURN"};
constexpr const char* kModes[] = {"REG AIR", "AIR", "RAIL", "SHIP", "TRUCK", "MAIL", "FOB"};
constexpr const char* kWords[] = {"furiously", "quickly", "carefully", "blithely", "slyly", "ironic", "final",
                                  "pending", "regular", "express", "special", "bold", "deposits", "requests",
                                  "accounts", "packages", "theodolites", "pinto", "beans", "foxes"};

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  // Modulo mapping keeps the stream identical across standard libraries.
  int64_t uniform(int64_t lo, int64_t hi) { return lo + static_cast<int64_t>(gen_() % static_cast<uint64_t>(hi - lo + 1)); }
  template <size_t N>
  const char* pick(const char* const (&arr)[N]) {
    return arr[gen_() % N];
  }
  std::string words(int lo, int hi) {
    std::string out;
    auto n = uniform(lo, hi);
    for (int64_t i = 0; i < n; ++i) {
      if (i) out.push_back(' ');
      out += pick(kWords);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

std::string padded(const char* prefix, int64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%09lld", prefix, static_cast<long long>(v));
  return buf;
}

// Retail price in cents of a part, following the TPC-H formula.
int64_t retail_cents(int64_t partkey) { return 90000 + ((partkey / 10) % 20001) + 100 * (partkey % 1000); }

size_t scaled(double base, double scale) {
  return std::max<size_t>(1, static_cast<size_t>(std::llround(base * scale)));
}

std::vector<Batch> chunk(std::vector<ColumnBuilder>& builders, size_t batch_rows) {
  std::vector<Column> cols;
  for (auto& b : builders) cols.push_back(b.finish());
  return rechunk(Batch(std::move(cols)), batch_rows);
}

std::vector<ColumnBuilder> builders_for(const Schema& s) {
  std::vector<ColumnBuilder> out;
  for (const auto& f : s) out.emplace_back(f.type);
  return out;
}

}  // namespace

size_t customer_rows(double scale) { return scaled(150000, scale); }
size_t order_rows(double scale) { return scaled(1500000, scale); }

Schema customer_schema() {
  auto dec = DataType::decimal(12, 2);
  return {{"c_custkey", DataType::int64(), false},  {"c_name", DataType::string(), false},
          {"c_address", DataType::string(), false}, {"c_nationkey", DataType::int64(), false},
          {"c_phone", DataType::string(), false},   {"c_acctbal", dec, false},
          {"c_mktsegment", DataType::string(), false}, {"c_comment", DataType::string(), false}};
}

Schema orders_schema() {
  return {{"o_orderkey", DataType::int64(), false},        {"o_custkey", DataType::int64(), false},
          {"o_orderstatus", DataType::string(), false},    {"o_totalprice", DataType::decimal(12, 2), false},
          {"o_orderdate", DataType::date32(), false},      {"o_orderpriority", DataType::string(), false},
          {"o_clerk", DataType::string(), false},          {"o_shippriority", DataType::int64(), false},
          {"o_comment", DataType::string(), false}};
}

Schema lineitem_schema() {
  auto dec = DataType::decimal(12, 2);
  return {{"l_orderkey", DataType::int64(), false},     {"l_partkey", DataType::int64(), false},
          {"l_suppkey", DataType::int64(), false},      {"l_linenumber", DataType::int64(), false},
          {"l_quantity", dec, false},                   {"l_extendedprice", dec, false},
          {"l_discount", dec, false},                   {"l_tax", dec, false},
          {"l_returnflag", DataType::string(), false},  {"l_linestatus", DataType::string(), false},
          {"l_shipdate", DataType::date32(), false},    {"l_commitdate", DataType::date32(), false},
          {"l_receiptdate", DataType::date32(), false}, {"l_shipinstruct", DataType::string(), false},
          {"l_shipmode", DataType::string(), false},    {"l_comment", DataType::string(), false}};
}

plan::Catalog tpch_catalog() {
  plan::Catalog c;
  c.add({"customer", customer_schema()});
  c.add({"orders", orders_schema()});
  c.add({"lineitem", lineitem_schema()});
  return c;
}

Generated generate(const GenSpec& spec, size_t batch_rows) {
  const size_t ncust = customer_rows(spec.scale);
  const size_t norders = order_rows(spec.scale);
  const int64_t nparts = static_cast<int64_t>(scaled(200000, spec.scale));
  const int64_t nsupp = static_cast<int64_t>(scaled(10000, spec.scale));
  const int32_t start = *date::parse("1992-01-01");
  const int32_t last_order = *date::parse("1998-08-02");
  const int32_t current = *date::parse("1995-06-17");

  Rng crng(spec.seed * 0x9E3779B97F4A7C15ULL + 1);
  auto cb = builders_for(customer_schema());
  for (size_t i = 0; i < ncust; ++i) {
    int64_t key = static_cast<int64_t>(i) + 1;
    int64_t nation = crng.uniform(0, 24);
    cb[0].append_int(key);
    cb[1].append_string(padded("Customer#", key));
    cb[2].append_string(crng.words(1, 3));
    cb[3].append_int(nation);
    char phone[32];
    std::snprintf(phone, sizeof(phone), "%02lld-%03lld-%03lld-%04lld", static_cast<long long>(nation + 10),
                  static_cast<long long>(crng.uniform(100, 999)), static_cast<long long>(crng.uniform(100, 999)),
                  static_cast<long long>(crng.uniform(1000, 9999)));
    cb[4].append_string(phone);
    cb[5].append_int(crng.uniform(-99999, 999999));
    cb[6].append_string(crng.pick(kSegments));
    cb[7].append_string(crng.words(2, 6));
  }

  Rng orng(spec.seed * 0x9E3779B97F4A7C15ULL + 2);
  auto ob = builders_for(orders_schema());
  auto lb = builders_for(lineitem_schema());
  for (size_t i = 0; i < norders; ++i) {
    int64_t okey = static_cast<int64_t>(i) + 1;
    int32_t odate = static_cast<int32_t>(orng.uniform(start, last_order));
    int64_t lines = orng.uniform(1, 7);
    __int128 total = 0;
    int open = 0;
    for (int64_t ln = 1; ln <= lines; ++ln) {
      int64_t part = orng.uniform(1, nparts);
      int64_t qty = orng.uniform(1, 50);
      int64_t ext = qty * retail_cents(part);
      int64_t disc = orng.uniform(0, 10);
      int64_t tax = orng.uniform(0, 8);
      int32_t ship = odate + static_cast<int32_t>(orng.uniform(1, 121));
      int32_t commit = odate + static_cast<int32_t>(orng.uniform(30, 90));
      int32_t receipt = ship + static_cast<int32_t>(orng.uniform(1, 30));
      const char* flag = receipt <= current ? (orng.uniform(0, 1) ? "R" : "A") : "N";
      const char* status = ship > current ? "O" : "F";
      open += status[0] == 'O';
      lb[0].append_int(okey);
      lb[1].append_int(part);
      lb[2].append_int(orng.uniform(1, nsupp));
      lb[3].append_int(ln);
      lb[4].append_int(qty * 100);
      lb[5].append_int(ext);
      lb[6].append_int(disc);
      lb[7].append_int(tax);
      lb[8].append_string(flag);
      lb[9].append_string(status);
      lb[10].append_int(ship);
      lb[11].append_int(commit);
      lb[12].append_int(receipt);
      lb[13].append_string(orng.pick(kInstructs));
      lb[14].append_string(orng.pick(kModes));
      lb[15].append_string(orng.words(1, 4));
      // ext * (1 + tax) * (1 - disc), all in hundredths
      total += static_cast<__int128>(ext) * (100 + tax) * (100 - disc);
    }
    ob[0].append_int(okey);
    ob[1].append_int(orng.uniform(1, static_cast<int64_t>(ncust)));
    ob[2].append_string(open == 0 ? "F" : (open == lines ? "O" : "P"));
    ob[3].append_int(static_cast<int64_t>((total + 5000) / 10000));
    ob[4].append_int(odate);
    ob[5].append_string(orng.pick(kPriorities));
    ob[6].append_string(padded("Clerk#", orng.uniform(1, std::max<int64_t>(1, nsupp / 10))));
    ob[7].append_int(0);
    ob[8].append_string(orng.words(2, 6));
  }

  Generated g;
  g.customer = Table("customer", customer_schema(), chunk(cb, batch_rows));
  g.orders = Table("orders", orders_schema(), chunk(ob, batch_rows));
  g.lineitem = Table("lineitem", lineitem_schema(), chunk(lb, batch_rows));
  return g;
}

void write_tables(const Generated& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const Table* t : {&g.customer, &g.orders, &g.lineitem}) {
    std::ofstream csv(dir / (t->name() + ".csv"), std::ios::binary);
    write_csv(csv, *t, false);
    std::ofstream schema(dir / (t->name() + ".schema.json"), std::ios::binary);
    schema << schema_to_json({t->name(), t->schema()}) << "\n";
  }
}

}  // namespace siriette::datagen
