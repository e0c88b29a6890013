#include <gtest/gtest.h>

#include "siriette/datagen/datagen.hpp"
#include "siriette/engine/engine.hpp"
#include "testing.hpp"

namespace siriette::engine {
namespace {

using testing::plan_text;

const datagen::Generated& tpch() {
  static const auto g = datagen::generate({1, 0.01});
  return g;
}

std::unique_ptr<Engine> make_loaded(EngineConfig c = {}) {
  auto e = std::make_unique<Engine>(std::move(c));
  e->load_table(tpch().customer);
  e->load_table(tpch().orders);
  e->load_table(tpch().lineitem);
  return e;
}

// 300 build rows joined against 300 probe rows on a unique key.
std::unique_ptr<Engine> make_three_hundred(EngineConfig c) {
  auto e = std::make_unique<Engine>(std::move(c));
  Schema s{{"k", DataType::int64(), false}, {"v", DataType::int64(), true}};
  ColumnBuilder k(DataType::int64()), v(DataType::int64());
  for (int i = 0; i < 300; ++i) {
    k.append_int(i);
    v.append_int(i * 7);
  }
  Batch b({k.finish(), v.finish()}, 300);
  e->load_table(testing::make_table("a", s, {b}));
  e->load_table(testing::make_table("b", s, {b}));
  return e;
}

constexpr const char* kJoin300 = R"({"catalog_ref":"t","root":{"kind":"hash_join","join_type":"inner",
    "inputs":[{"kind":"read","table":"a","columns":[0,1]},{"kind":"read","table":"b","columns":[0,1]}],
    "keys":[[0,0]]}})";

TEST(Config, ParsesKeyValueLines) {
  auto c = EngineConfig::parse(
      "# comment\nworkers = 3\nbatch_size_rows=100\n\ngroupby_strategy_override=sort\n"
      "processing_bytes=1MiB\nmemory_total_bytes=2G\nnarrow_index_limit=255\n");
  EXPECT_EQ(c.workers, 3u);
  EXPECT_EQ(c.batch_size_rows, 100u);
  EXPECT_EQ(c.groupby_override, plan::GroupStrategy::kSort);
  EXPECT_EQ(c.memory.caching_bytes, 1ull << 30);
  EXPECT_EQ(c.memory.processing_bytes, 1ull << 20);
  EXPECT_EQ(c.narrow_index_limit, 255u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(EngineConfig::parse("colour=blue\n"), Error);
  EXPECT_THROW(EngineConfig::parse("workers=many\n"), Error);
  EXPECT_THROW(EngineConfig::parse("workers\n"), Error);
  EXPECT_THROW(parse_bytes("12XB"), Error);
  EXPECT_EQ(parse_bytes("4k"), 4096u);
}

TEST(Engine, CoveredPlanRunsNative) {
  auto e_ptr = make_loaded();
  auto& e = *e_ptr;
  auto r = e.run(plan_text("q6"));
  EXPECT_EQ(r.used.tag, EngineTag::kNative);
  EXPECT_FALSE(r.used.reason.has_value());
  auto o = e.run(plan_text("q6"), {EngineMode::kOracleOnly});
  EXPECT_EQ(o.used.tag, EngineTag::kOracle);
  std::string why;
  EXPECT_TRUE(testing::equivalent(r.table, o.table, 1e-9, &why)) << why;
}

TEST(Engine, UnknownRelationFallsBack) {
  auto e_ptr = make_loaded();
  auto& e = *e_ptr;
  auto r = e.run(plan_text("distinct_flags"));
  EXPECT_EQ(r.used.tag, EngineTag::kFallback);
  EXPECT_EQ(r.used.reason, ErrorCode::kUnknownRelation);
  EXPECT_GT(r.table.num_rows(), 0u);
}

TEST(Engine, IndexOverflowFallsBackWithEqualResult) {
  auto unrestricted = make_three_hundred({})->run(kJoin300);
  ASSERT_EQ(unrestricted.used.tag, EngineTag::kNative);
  EngineConfig c;
  c.narrow_index_limit = 255;
  auto holder = make_three_hundred(c);
  auto& e = *holder;
  auto r = e.run(kJoin300);
  EXPECT_EQ(r.used.tag, EngineTag::kFallback);
  EXPECT_EQ(r.used.reason, ErrorCode::kIndexOverflow);
  std::string why;
  EXPECT_TRUE(testing::equivalent(r.table, unrestricted.table, 0.0, &why)) << why;
  EXPECT_EQ(e.buffers().stats().processing.used, 0u);
  EXPECT_THROW(e.run(kJoin300, {EngineMode::kNativeOnly}), Error);
}

TEST(Engine, ProcessingCapFallsBackWithEqualResult) {
  EngineConfig c;
  c.memory.processing_bytes = 1 << 20;
  auto capped_ptr = make_loaded(c);
  auto& capped = *capped_ptr;
  auto full_ptr = make_loaded();
  auto& full = *full_ptr;
  for (const char* q : {"q1", "q3"}) {
    auto r = capped.run(plan_text(q));
    EXPECT_EQ(r.used.tag, EngineTag::kFallback) << q;
    EXPECT_EQ(r.used.reason, ErrorCode::kProcessingExhausted) << q;
    EXPECT_EQ(capped.buffers().stats().processing.used, 0u);
    auto n = full.run(plan_text(q));
    std::string why;
    EXPECT_TRUE(testing::equivalent(r.table, n.table, 1e-9, &why)) << q << ": " << why;
  }
}

TEST(Engine, SharedErrorsSurface) {
  auto e_ptr = make_loaded();
  auto& e = *e_ptr;
  try {
    e.run(R"({"catalog_ref":"t","root":{"kind":"read","table":"ghost","columns":[0]}})");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kMissingTable);
  }
  EXPECT_THROW(e.run("{not json"), Error);
}

TEST(Engine, DuplicateLoadRejected) {
  auto e_ptr = make_loaded();
  auto& e = *e_ptr;
  EXPECT_THROW(e.load_table(tpch().orders), Error);
}

TEST(Engine, CacheFullOnLoadLeavesCatalogUnchanged) {
  EngineConfig c;
  c.memory.caching_bytes = 1024;
  Engine e(c);
  try {
    e.load_table(tpch().orders);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kCacheFull);
  }
  EXPECT_FALSE(e.has_table("orders"));
}

// Every committed plan gives the same answer natively and through the oracle.
TEST(Engine, FallbackTransparencyOverCommittedPlans) {
  auto e_ptr = make_loaded();
  auto& e = *e_ptr;
  for (const char* q : {"q1", "q3", "q6", "q3_shuffle", "anti_join_customers", "left_join_orders", "segment_stats",
                        "shipmode_priority", "top_orders"}) {
    auto n = e.run(plan_text(q));
    auto o = e.run(plan_text(q), {EngineMode::kOracleOnly});
    std::string why;
    EXPECT_TRUE(testing::equivalent(n.table, o.table, 1e-9, &why)) << q << ": " << why;
    EXPECT_EQ(e.buffers().stats().processing.used, 0u);
  }
}

TEST(Engine, ProfileAttributesJoinsOnlyToJoinPlans) {
  auto e_ptr = make_loaded();
  auto& e = *e_ptr;
  for (const char* q : {"q1", "q3", "q6"}) {
    auto r = e.run(plan_text(q), {EngineMode::kAuto, true});
    ASSERT_TRUE(r.profile);
    const auto& p = *r.profile;
    EXPECT_EQ(p.compute_ns + p.exchange_ns + p.other_ns, p.total_ns);
    EXPECT_EQ(p.exchange_ns, 0);
    EXPECT_EQ(p.category(exec::Category::kJoin) > 0, std::string(q) == "q3") << q;
  }
}

TEST(Engine, ReferenceBackendAgrees) {
  EngineConfig c;
  c.backend = "reference";
  auto ref_ptr = make_loaded(c);
  auto& ref = *ref_ptr;
  auto vec_ptr = make_loaded();
  auto& vec = *vec_ptr;
  auto a = ref.run(plan_text("q3"));
  auto b = vec.run(plan_text("q3"));
  EXPECT_EQ(a.used.tag, EngineTag::kNative);
  std::string why;
  EXPECT_TRUE(testing::equal_in_order(a.table, b.table, 1e-9, &why)) << why;
}

}  // namespace
}  // namespace siriette::engine
