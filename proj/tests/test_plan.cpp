#include <gtest/gtest.h>

#include "siriette/datagen/datagen.hpp"
#include "siriette/plan/document.hpp"
#include "siriette/plan/fragments.hpp"
#include "siriette/plan/validate.hpp"
#include "testing.hpp"

namespace siriette::plan {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

Catalog small_catalog() {
  Catalog c;
  c.add({"t", {{"a", DataType::int64(), true}}});
  c.add({"s", {{"k", DataType::string(), true}, {"v", DataType::int64(), true}, {"f", DataType::float64(), true}}});
  return c;
}

PhysicalPlan validated(const std::string& doc, const Catalog& c = small_catalog(), ValidateOptions opts = {}) {
  return validate_plan(parse_plan(doc, all_relations()), c, opts);
}

PhysicalPlan tpch(const std::string& name) {
  return validate_plan(parse_plan(testing::plan_text(name), all_relations()), datagen::tpch_catalog());
}

TEST(ParsePlan, MinimalRead) {
  auto g = parse_plan(R"({"catalog_ref":"x","root":{"kind":"read","table":"t","columns":[0]}})");
  ASSERT_TRUE(g.root);
  EXPECT_EQ(g.root->kind(), RelKind::kRead);
  EXPECT_TRUE(g.root->inputs.empty());
  EXPECT_EQ(std::get<ReadRel>(g.root->rel).table, "t");
}

TEST(ParsePlan, FilterWithoutChild) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"filter","inputs":[],
    "condition":{"op":"literal","type":"BOOL","value":true}}})";
  EXPECT_EQ(code_of([&] { parse_plan(doc); }), ErrorCode::kSyntaxError);
}

TEST(ParsePlan, MalformedJson) { EXPECT_EQ(code_of([] { parse_plan("{not json"); }), ErrorCode::kSyntaxError); }

TEST(ParsePlan, UnknownRelation) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"window","inputs":[]}})";
  EXPECT_EQ(code_of([&] { parse_plan(doc); }), ErrorCode::kUnknownRelation);
}

TEST(ParsePlan, ReferenceOnlyRelationIsUnknownToNativeGrammar) {
  auto doc = testing::plan_text("distinct_flags");
  EXPECT_EQ(code_of([&] { parse_plan(doc); }), ErrorCode::kUnknownRelation);
  EXPECT_NO_THROW(parse_plan(doc, all_relations()));
}

TEST(ParsePlan, UnknownFunction) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"filter","inputs":[{"kind":"read","table":"t","columns":[0]}],
    "condition":{"op":"regexp","args":[]}}})";
  EXPECT_EQ(code_of([&] { parse_plan(doc); }), ErrorCode::kUnknownFunction);
}

TEST(ParsePlan, Q6ShapeHasThreeNodes) {
  auto g = parse_plan(testing::plan_text("q6"));
  ASSERT_EQ(g.root->kind(), RelKind::kAggregate);
  ASSERT_EQ(g.root->inputs[0]->kind(), RelKind::kFilter);
  ASSERT_EQ(g.root->inputs[0]->inputs[0]->kind(), RelKind::kRead);
  EXPECT_TRUE(g.root->inputs[0]->inputs[0]->inputs.empty());
}

TEST(ParsePlan, MergeExchangeNeedsSortChild) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"exchange","pattern":"merge",
    "inputs":[{"kind":"read","table":"t","columns":[0]}]}})";
  EXPECT_EQ(code_of([&] { parse_plan(doc); }), ErrorCode::kSyntaxError);
  auto mismatched = R"({"catalog_ref":"x","root":{"kind":"exchange","pattern":"merge","keys":[1],
    "inputs":[{"kind":"sort","keys":[{"column":0}],"inputs":[{"kind":"read","table":"t","columns":[0]}]}]}})";
  EXPECT_EQ(code_of([&] { parse_plan(mismatched); }), ErrorCode::kSyntaxError);
}

TEST(ParsePlan, PrintParseRoundTrip) {
  for (const char* name : {"q1", "q3", "q6", "q1_dist", "q3_dist", "q6_dist", "q3_shuffle", "left_join_orders",
                           "anti_join_customers", "segment_stats", "shipmode_priority", "top_orders",
                           "distinct_flags"}) {
    auto g = parse_plan(testing::plan_text(name), all_relations());
    auto printed = print_plan(g);
    auto again = parse_plan(printed, all_relations());
    EXPECT_TRUE(structurally_equal(*g.root, *again.root)) << name;
    EXPECT_EQ(print_plan(again), printed) << name;
  }
}

TEST(ValidatePlan, FilterKeepsInputSchema) {
  auto p = validated(R"({"catalog_ref":"x","root":{"kind":"filter","inputs":[{"kind":"read","table":"t","columns":[0]}],
    "condition":{"op":"eq","args":[{"op":"column","index":0},{"op":"literal","type":"INT64","value":5}]}}})");
  ASSERT_EQ(p.root->schema.size(), 1u);
  EXPECT_EQ(p.root->schema[0].name, "a");
  EXPECT_EQ(p.root->schema[0].type, DataType::int64());
}

TEST(ValidatePlan, StringGroupKeyPicksSort) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"aggregate","group_by":[0],
    "measures":[{"fn":"count","name":"n"}],"inputs":[{"kind":"read","table":"s","columns":[0,1]}]}})";
  EXPECT_EQ(validated(doc).root->strategy, GroupStrategy::kSort);
  ValidateOptions opts;
  opts.groupby_override = GroupStrategy::kHash;
  EXPECT_EQ(validated(doc, small_catalog(), opts).root->strategy, GroupStrategy::kHash);
  auto int_key = R"({"catalog_ref":"x","root":{"kind":"aggregate","group_by":[1],
    "measures":[{"fn":"count","name":"n"}],"inputs":[{"kind":"read","table":"s","columns":[0,1]}]}})";
  EXPECT_EQ(validated(int_key).root->strategy, GroupStrategy::kHash);
}

TEST(ValidatePlan, StringVersusIntCompareIsTypeMismatch) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"filter","inputs":[{"kind":"read","table":"s","columns":[0,1]}],
    "condition":{"op":"eq","args":[{"op":"column","index":0},{"op":"column","index":1}]}}})";
  EXPECT_EQ(code_of([&] { validated(doc); }), ErrorCode::kTypeMismatch);
}

TEST(ValidatePlan, AvgOverIntIsFloat) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"aggregate","group_by":[],
    "measures":[{"fn":"avg","arg":{"op":"column","index":1}},{"fn":"sum","arg":{"op":"column","index":1}}],
    "inputs":[{"kind":"read","table":"s","columns":[0,1]}]}})";
  auto p = validated(doc);
  EXPECT_EQ(p.root->schema[0].type, DataType::float64());
  EXPECT_EQ(p.root->schema[1].type, DataType::int64());
  EXPECT_EQ(p.root->schema[0].name, "avg_0");
}

TEST(ValidatePlan, CompareYieldsBool) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"project","inputs":[{"kind":"read","table":"s","columns":[1,2]}],
    "expressions":[{"op":"lt","args":[{"op":"column","index":0},{"op":"column","index":1}]}]}})";
  EXPECT_EQ(validated(doc).root->schema[0].type, DataType::boolean());
}

TEST(ValidatePlan, MissingTableAndOrdinal) {
  EXPECT_EQ(code_of([] { validated(R"({"catalog_ref":"x","root":{"kind":"read","table":"zz","columns":[0]}})"); }),
            ErrorCode::kMissingTable);
  EXPECT_EQ(code_of([] { validated(R"({"catalog_ref":"x","root":{"kind":"read","table":"t","columns":[3]}})"); }),
            ErrorCode::kOrdinalOutOfRange);
}

TEST(ValidatePlan, PartialAvgEmitsSumAndCount) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"aggregate","group_by":[0],"phase":"partial",
    "measures":[{"fn":"avg","arg":{"op":"column","index":1},"name":"m"}],
    "inputs":[{"kind":"read","table":"s","columns":[0,1]}]}})";
  auto p = validated(doc);
  ASSERT_EQ(p.root->schema.size(), 3u);
  EXPECT_EQ(p.root->schema[1].name, "m_sum");
  EXPECT_EQ(p.root->schema[2].name, "m_count");
}

TEST(ValidatePlan, TpchPlansValidate) {
  auto q1 = tpch("q1");
  EXPECT_EQ(q1.root->schema.size(), 10u);
  EXPECT_EQ(q1.root->schema[2].type, DataType::decimal(18, 2));
  EXPECT_EQ(q1.root->schema[5].type, DataType::decimal(18, 6));
  EXPECT_EQ(q1.root->schema[6].type, DataType::float64());
  auto q6 = tpch("q6");
  EXPECT_EQ(q6.root->schema[0].type, DataType::decimal(18, 4));
  auto q3 = tpch("q3");
  EXPECT_EQ(q3.root->schema.size(), 4u);
}

TEST(ValidatePlan, IdsArePostOrderAndTopological) {
  auto p = tpch("q3");
  for (size_t i = 0; i < p.nodes.size(); ++i) {
    EXPECT_EQ(p.nodes[i]->id, static_cast<int>(i));
    for (const auto& in : p.nodes[i]->inputs) EXPECT_LT(in->id, p.nodes[i]->id);
  }
  EXPECT_EQ(p.root->id, static_cast<int>(p.nodes.size()) - 1);
}

TEST(ValidatePlan, Deterministic) {
  for (const char* name : {"q1", "q3", "q6", "q3_dist", "shipmode_priority"}) {
    auto a = tpch(name), b = tpch(name);
    EXPECT_TRUE(physically_equal(*a.root, *b.root)) << name;
  }
}

TEST(SplitFragments, NoExchangeIsOneFragment) {
  auto set = split_fragments(tpch("q1"));
  ASSERT_EQ(set.fragments.size(), 1u);
  EXPECT_TRUE(set.edges.empty());
  EXPECT_FALSE(set.root().output_exchange.has_value());
}

TEST(SplitFragments, ShuffleThenFinalAggregateIsTwoFragments) {
  auto doc = R"({"catalog_ref":"x","root":{"kind":"aggregate","group_by":[0],"phase":"final",
    "measures":[{"fn":"count","arg":{"op":"column","index":1}}],
    "inputs":[{"kind":"exchange","pattern":"shuffle","keys":[0],"inputs":[
      {"kind":"aggregate","group_by":[0],"phase":"partial","measures":[{"fn":"count"}],
       "inputs":[{"kind":"read","table":"s","columns":[1]}]}]}]}})";
  auto p = validated(doc);
  auto set = split_fragments(p);
  ASSERT_EQ(set.fragments.size(), 2u);
  ASSERT_EQ(set.edges.size(), 1u);
  EXPECT_EQ(set.edges[0].pattern, ExchangePattern::kShuffle);
  EXPECT_EQ(set.edges[0].producer, set.fragments[0].id);
  EXPECT_EQ(set.edges[0].consumer, set.fragments[1].id);
  EXPECT_EQ(set.fragments[1].input_exchanges, std::vector<uint32_t>{set.edges[0].id});
}

TEST(SplitFragments, Q3ShapeIsThreeFragmentsTwoShuffles) {
  auto set = split_fragments(tpch("q3_shuffle"));
  ASSERT_EQ(set.fragments.size(), 3u);
  ASSERT_EQ(set.edges.size(), 2u);
  for (const auto& e : set.edges) {
    EXPECT_EQ(e.pattern, ExchangePattern::kShuffle);
    EXPECT_EQ(e.consumer, set.root().id);
  }
}

TEST(SplitFragments, EveryExchangeIsExactlyOneEdge) {
  for (const char* name : {"q1_dist", "q3_dist", "q6_dist", "q3_shuffle"}) {
    auto p = tpch(name);
    auto set = split_fragments(p);
    size_t exchanges = 0;
    for (const auto* n : p.nodes) {
      if (n->kind() != RelKind::kExchange) continue;
      ++exchanges;
      size_t hits = 0;
      for (const auto& e : set.edges) hits += e.id == static_cast<uint32_t>(n->id);
      EXPECT_EQ(hits, 1u) << name;
    }
    EXPECT_EQ(set.edges.size(), exchanges) << name;
    EXPECT_EQ(set.fragments.size(), exchanges + 1) << name;
    for (const auto& f : set.fragments) EXPECT_FALSE(contains_kind(f.root, RelKind::kExchange)) << name;
  }
}

TEST(SplitFragments, ReassemblyIsIsomorphic) {
  for (const char* name : {"q1", "q1_dist", "q3_dist", "q6_dist", "q3_shuffle"}) {
    auto p = tpch(name);
    auto back = reassemble(split_fragments(p));
    EXPECT_TRUE(physically_equal(*p.root, *back)) << name;
  }
}

TEST(SplitFragments, ProducersPrecedeConsumers) {
  auto set = split_fragments(tpch("q3_dist"));
  EXPECT_EQ(set.fragments.size(), 5u);
  for (const auto& e : set.edges) {
    size_t producer = 0, consumer = 0;
    for (size_t i = 0; i < set.fragments.size(); ++i) {
      if (set.fragments[i].id == e.producer) producer = i;
      if (set.fragments[i].id == e.consumer) consumer = i;
    }
    EXPECT_LT(producer, consumer);
  }
}

}  // namespace
}  // namespace siriette::plan
