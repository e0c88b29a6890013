#include <gtest/gtest.h>

#include "siriette/columnar/csv.hpp"
#include "siriette/datagen/datagen.hpp"
#include "siriette/oracle/oracle.hpp"
#include "siriette/plan/document.hpp"
#include "siriette/plan/validate.hpp"
#include "testing.hpp"

namespace siriette {
namespace {

struct Fixture {
  plan::Catalog catalog;
  std::map<std::string, Table> tables;

  void add(const std::string& name, const Schema& schema, const std::string& csv) {
    catalog.add({name, schema});
    tables.emplace(name, read_csv_text(csv, name, schema));
  }

  oracle::OracleInputs inputs() const {
    oracle::OracleInputs in;
    in.tables = [this](const std::string& name) -> const Table& {
      auto it = tables.find(name);
      if (it == tables.end()) raise(ErrorCode::kMissingTable, name);
      return it->second;
    };
    return in;
  }

  Table run(const std::string& doc) const {
    auto p = plan::validate_plan(plan::parse_plan(doc, plan::all_relations()), catalog);
    return oracle::oracle_execute(p, inputs());
  }
};

Fixture people() {
  Fixture f;
  f.add("emp", {{"id", DataType::int64(), false}, {"dept", DataType::int64(), true}, {"pay", DataType::decimal(12, 2), true}},
        "1,10,100.00\n2,10,50.50\n3,20,\n4,,7.25\n5,20,20.00\n");
  f.add("dept", {{"id", DataType::int64(), false}, {"name", DataType::string(), false}},
        "10,eng\n20,ops\n30,legal\n");
  return f;
}

std::string plan(const std::string& root) { return R"({"catalog_ref":"t","root":)" + root + "}"; }

TEST(Oracle, FilterAndProject) {
  auto t = people().run(plan(R"J({"kind":"project","inputs":[{"kind":"filter",
      "inputs":[{"kind":"read","table":"emp","columns":[0,2]}],
      "condition":{"op":"gt","args":[{"op":"column","index":1},{"op":"literal","type":"DECIMAL(12,2)","value":"20.00"}]}}],
      "expressions":[{"op":"column","index":0},
                     {"op":"multiply","args":[{"op":"column","index":1},{"op":"literal","type":"INT64","value":2}]}],
      "names":["id","double_pay"]})J"));
  EXPECT_EQ(to_csv(t), "1,200.00\n2,101.00\n");
}

TEST(Oracle, GroupByWithNullKey) {
  auto t = people().run(plan(R"J({"kind":"aggregate","inputs":[{"kind":"read","table":"emp","columns":[1,2]}],
      "group_by":[0],"measures":[{"fn":"sum","arg":{"op":"column","index":1}},
                             {"fn":"count","arg":{"op":"column","index":1}},
                             {"fn":"count"}]})J"));
  EXPECT_EQ(testing::canonical_csv(t), "dept,sum_0,count_1,count_2\n,7.25,1,1\n10,150.50,2,2\n20,20.00,1,2\n");
}

TEST(Oracle, InnerJoinProbeColumnsFirst) {
  auto t = people().run(plan(R"J({"kind":"hash_join","join_type":"inner",
      "inputs":[{"kind":"read","table":"emp","columns":[0,1]},{"kind":"read","table":"dept","columns":[0,1]}],
      "keys":[[1,0]]})J"));
  EXPECT_EQ(to_csv(t), "1,10,10,eng\n2,10,10,eng\n3,20,20,ops\n5,20,20,ops\n");
}

TEST(Oracle, LeftJoinPadsWithNulls) {
  auto t = people().run(plan(R"J({"kind":"hash_join","join_type":"left",
      "inputs":[{"kind":"read","table":"emp","columns":[0,1]},{"kind":"read","table":"dept","columns":[0,1]}],
      "keys":[[1,0]]})J"));
  EXPECT_EQ(to_csv(t), "1,10,10,eng\n2,10,10,eng\n3,20,20,ops\n4,,,\n5,20,20,ops\n");
}

TEST(Oracle, SemiAndAntiKeepProbeColumns) {
  auto semi = people().run(plan(R"J({"kind":"hash_join","join_type":"semi",
      "inputs":[{"kind":"read","table":"dept","columns":[1,0]},{"kind":"read","table":"emp","columns":[1]}],
      "keys":[[1,0]]})J"));
  EXPECT_EQ(to_csv(semi), "eng,10\nops,20\n");
  auto anti = people().run(plan(R"J({"kind":"hash_join","join_type":"anti",
      "inputs":[{"kind":"read","table":"dept","columns":[1,0]},{"kind":"read","table":"emp","columns":[1]}],
      "keys":[[1,0]]})J"));
  EXPECT_EQ(to_csv(anti), "legal,30\n");
}

TEST(Oracle, SortDescNullsFirstThenLimit) {
  auto t = people().run(plan(R"J({"kind":"limit","count":3,"inputs":[{"kind":"sort",
      "inputs":[{"kind":"read","table":"emp","columns":[0,2]}],
      "keys":[{"column":1,"order":"desc","nulls":"first"}]}]})J"));
  EXPECT_EQ(to_csv(t), "3,\n1,100.00\n2,50.50\n");
}

TEST(Oracle, ScalarAggregateOnEmptyInput) {
  auto t = people().run(plan(R"J({"kind":"aggregate","inputs":[{"kind":"filter",
      "inputs":[{"kind":"read","table":"emp","columns":[2]}],
      "condition":{"op":"literal","type":"BOOL","value":false}}],
      "group_by":[],"measures":[{"fn":"sum","arg":{"op":"column","index":0}},{"fn":"count"},
                            {"fn":"avg","arg":{"op":"column","index":0}}]})J"));
  EXPECT_EQ(to_csv(t), ",0,\n");
}

TEST(Oracle, GroupedAggregateOnEmptyInputHasNoRows) {
  auto t = people().run(plan(R"J({"kind":"aggregate","inputs":[{"kind":"filter",
      "inputs":[{"kind":"read","table":"emp","columns":[1,2]}],
      "condition":{"op":"literal","type":"BOOL","value":false}}],
      "group_by":[0],"measures":[{"fn":"count"}]})J"));
  EXPECT_EQ(t.num_rows(), 0u);
}

TEST(Oracle, MissingTableRaises) {
  auto f = people();
  f.catalog.add({"ghost", {{"x", DataType::int64(), true}}});
  try {
    f.run(plan(R"J({"kind":"read","table":"ghost","columns":[0]})J"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingTable);
  }
}

TEST(Oracle, DistinctAndUnionAll) {
  auto t = people().run(plan(R"J({"kind":"distinct","inputs":[{"kind":"union_all","inputs":[
      {"kind":"read","table":"emp","columns":[1]},{"kind":"read","table":"dept","columns":[0]}]}]})J"));
  EXPECT_EQ(testing::canonical_csv(t), "dept\n\n10\n20\n30\n");
}

// Q1 over the first 100 generated lineitem rows. The expected file was
// cross-checked against an independent Python evaluation of the same rows.
TEST(Oracle, Q1SnapshotOnHundredRows) {
  auto g = datagen::generate({1, 0.001}, 100);
  ASSERT_GE(g.lineitem.num_rows(), 100u);
  Fixture f;
  f.catalog = datagen::tpch_catalog();
  f.tables.emplace("lineitem", Table("lineitem", g.lineitem.schema(), {g.lineitem.batches().front()}));
  auto t = f.run(testing::plan_text("q1"));
  EXPECT_EQ(to_csv(t), testing::read_file(std::string(SIRIETTE_SOURCE_DIR) + "/tests/golden/q1_100rows.csv"));
}

}  // namespace
}  // namespace siriette
