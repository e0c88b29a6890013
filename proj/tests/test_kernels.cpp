#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <cstring>
#include <set>

#include "siriette/kernels/backend.hpp"
#include "siriette/kernels/hash.hpp"
#include "siriette/kernels/kernels.hpp"
#include "siriette/oracle/reference_backend.hpp"
#include "siriette/oracle/scalar.hpp"
#include "siriette/plan/validate.hpp"
#include "testing.hpp"

namespace siriette {
namespace {

using namespace plan;
using kernels::AggMode;
using kernels::AggSpec;

Column ints(std::vector<int64_t> v, Bitmap bits = {}) { return Column::make<int64_t>(DataType::int64(), std::move(v), std::move(bits)); }

Column opt_ints(std::initializer_list<std::optional<int64_t>> values) {
  ColumnBuilder b(DataType::int64());
  for (auto v : values) {
    if (v) {
      b.append_int(*v);
    } else {
      b.append_null();
    }
  }
  return b.finish();
}

Column opt_bools(std::initializer_list<std::optional<bool>> values) {
  ColumnBuilder b(DataType::boolean());
  for (auto v : values) {
    if (v) {
      b.append_bool(*v);
    } else {
      b.append_null();
    }
  }
  return b.finish();
}

Column strs(std::initializer_list<std::string> values) {
  ColumnBuilder b(DataType::string());
  for (const auto& v : values) b.append_string(v);
  return b.finish();
}

bool datum_close(const Datum& a, const Datum& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<double>(&a)) {
    double y = std::get<double>(b);
    if (std::isnan(*x) || std::isnan(y)) return std::isnan(*x) && std::isnan(y);
    return std::abs(*x - y) <= 1e-9 * std::max({1.0, std::abs(*x), std::abs(y)});
  }
  return a == b;
}

Schema all_types_schema() {
  return {{"i", DataType::int64(), true},     {"f", DataType::float64(), true}, {"d", DataType::decimal(12, 2), true},
          {"t", DataType::date32(), true},    {"b", DataType::boolean(), true}, {"s", DataType::string(), true},
          {"j", DataType::int64(), true}};
}

Batch all_types_batch(std::mt19937_64& rng, size_t rows, double null_density) {
  std::vector<testing::RandomColumnSpec> specs;
  for (const auto& f : all_types_schema()) specs.push_back({f.type, null_density});
  return testing::random_batch(rng, specs, rows);
}

std::vector<uint64_t> wide(const SelectionVector& s) { return s.to_wide(); }

// ---------------------------------------------------------------- expressions

TEST(EvalExpr, AddLiteralPropagatesNull) {
  Schema s{{"x", DataType::int64(), true}};
  auto e = resolve_expr(arith(ArithOp::kAdd, column_ref(0), literal(DataType::int64(), int64_t{1})), s);
  auto out = kernels::eval_expr(*e, Batch({opt_ints({1, 2, std::nullopt})}));
  EXPECT_EQ(out.datum(0), Datum(int64_t{2}));
  EXPECT_EQ(out.datum(1), Datum(int64_t{3}));
  EXPECT_FALSE(out.is_valid(2));
}

TEST(EvalExpr, LikePrefix) {
  Schema s{{"p", DataType::string(), false}};
  auto e = resolve_expr(like(column_ref(0), "PROMO%"), s);
  auto out = kernels::eval_expr(*e, Batch({strs({"PROMO BRUSHED", "STANDARD", "PROMO", "xPROMO"})}));
  EXPECT_EQ(out.datum(0), Datum(true));
  EXPECT_EQ(out.datum(1), Datum(false));
  EXPECT_EQ(out.datum(2), Datum(true));
  EXPECT_EQ(out.datum(3), Datum(false));
}

TEST(EvalExpr, LikeMatchesScalarMatcher) {
  const char* patterns[] = {"%", "", "a%", "%a", "%b%", "_", "a_c", "%a%b%c%", "\\%%", "a\\_b", "%%a", "_%_"};
  const char* inputs[] = {"", "a", "ab", "abc", "aXc", "%x", "a_b", "aab", "cba", "abcabc", "b"};
  Schema s{{"s", DataType::string(), false}};
  ColumnBuilder builder(DataType::string());
  for (auto* in : inputs) builder.append_string(in);
  Batch b({builder.finish()});
  for (auto* p : patterns) {
    auto out = kernels::eval_expr(*resolve_expr(like(column_ref(0), p), s), b);
    for (size_t i = 0; i < std::size(inputs); ++i) {
      EXPECT_EQ(out.datum(i), Datum(oracle::like_match(p, inputs[i]))) << p << " on '" << inputs[i] << "'";
    }
  }
}

TEST(EvalExpr, KleeneLogic) {
  Schema s{{"a", DataType::boolean(), true}, {"b", DataType::boolean(), true}};
  auto a = opt_bools({std::nullopt, std::nullopt, std::nullopt, true, false});
  auto b = opt_bools({false, true, std::nullopt, std::nullopt, std::nullopt});
  Batch batch({a, b});
  auto conj = kernels::eval_expr(*resolve_expr(bool_and({column_ref(0), column_ref(1)}), s), batch);
  auto disj = kernels::eval_expr(*resolve_expr(bool_or({column_ref(0), column_ref(1)}), s), batch);
  auto neg = kernels::eval_expr(*resolve_expr(bool_not(column_ref(0)), s), batch);
  EXPECT_EQ(conj.datum(0), Datum(false));
  EXPECT_FALSE(conj.is_valid(1));
  EXPECT_FALSE(conj.is_valid(2));
  EXPECT_FALSE(conj.is_valid(3));
  EXPECT_EQ(conj.datum(4), Datum(false));
  EXPECT_FALSE(disj.is_valid(0));
  EXPECT_EQ(disj.datum(1), Datum(true));
  EXPECT_EQ(disj.datum(3), Datum(true));
  EXPECT_FALSE(disj.is_valid(4));
  EXPECT_FALSE(neg.is_valid(0));
  EXPECT_EQ(neg.datum(3), Datum(false));
}

TEST(EvalExpr, DivisionByZeroIsNull) {
  Schema s{{"x", DataType::int64(), false}, {"y", DataType::int64(), false}};
  auto e = resolve_expr(arith(ArithOp::kDiv, column_ref(0), column_ref(1)), s);
  auto out = kernels::eval_expr(*e, Batch({ints({7, -7, 1}), ints({2, 2, 0})}));
  EXPECT_EQ(out.datum(0), Datum(int64_t{3}));
  EXPECT_EQ(out.datum(1), Datum(int64_t{-3}));
  EXPECT_FALSE(out.is_valid(2));
}

TEST(EvalExpr, DecimalTimesDecimalCarriesScale) {
  Schema s{{"p", DataType::decimal(12, 2), false}, {"d", DataType::decimal(12, 2), false}};
  auto e = resolve_expr(arith(ArithOp::kMul, column_ref(0), column_ref(1)), s);
  EXPECT_EQ(e->type, DataType::decimal(18, 4));
  auto p = Column::make<int64_t>(DataType::decimal(12, 2), {12345});
  auto d = Column::make<int64_t>(DataType::decimal(12, 2), {6});
  auto out = kernels::eval_expr(*e, Batch({p, d}));
  EXPECT_EQ(out.datum(0), Datum(int64_t{74070}));  // 123.45 * 0.06 = 7.4070
}

TEST(EvalExpr, MixedDecimalComparison) {
  Schema s{{"p", DataType::decimal(12, 2), false}};
  auto e = resolve_expr(compare(CompareOp::kLe, column_ref(0), literal(DataType::decimal(12, 4), int64_t{10050})), s);
  auto p = Column::make<int64_t>(DataType::decimal(12, 2), {100, 101, 99});
  auto out = kernels::eval_expr(*e, Batch({p}));
  EXPECT_EQ(out.datum(0), Datum(true));
  EXPECT_EQ(out.datum(1), Datum(false));
  EXPECT_EQ(out.datum(2), Datum(true));
}

TEST(EvalExpr, AdditionOverflowRaises) {
  Schema s{{"x", DataType::int64(), false}};
  auto e = resolve_expr(arith(ArithOp::kAdd, column_ref(0), literal(DataType::int64(), int64_t{1})), s);
  try {
    kernels::eval_expr(*e, Batch({ints({INT64_MAX})}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kArithmeticOverflow);
  }
}

TEST(EvalExpr, CaseFirstMatchingBranch) {
  Schema s{{"x", DataType::int64(), true}};
  auto e = resolve_expr(case_when({compare(CompareOp::kLt, column_ref(0), literal(DataType::int64(), int64_t{0})),
                                   literal(DataType::string(), std::string("neg")),
                                   compare(CompareOp::kEq, column_ref(0), literal(DataType::int64(), int64_t{0})),
                                   literal(DataType::string(), std::string("zero"))}),
                        s);
  auto out = kernels::eval_expr(*e, Batch({opt_ints({-1, 0, 5, std::nullopt})}));
  EXPECT_EQ(out.datum(0), Datum(std::string("neg")));
  EXPECT_EQ(out.datum(1), Datum(std::string("zero")));
  EXPECT_FALSE(out.is_valid(2));
  EXPECT_FALSE(out.is_valid(3));
}

TEST(CastColumn, RoundsHalfAwayFromZero) {
  auto head = Column::make<double>(DataType::float64(), {2.5, -2.5, 0.49});
  auto out = kernels::cast_column(head, DataType::int64());
  EXPECT_EQ(out.values<int64_t>()[0], 3);
  EXPECT_EQ(out.values<int64_t>()[1], -3);
  EXPECT_EQ(out.values<int64_t>()[2], 0);
  try {
    kernels::cast_column(Column::make<double>(DataType::float64(), {1e30}), DataType::int64());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kArithmeticOverflow);
  }
}

TEST(CastColumn, DecimalRescale) {
  auto c = Column::make<int64_t>(DataType::decimal(12, 2), {125, -125, 124});
  auto out = kernels::cast_column(c, DataType::decimal(12, 1));
  EXPECT_EQ(out.values<int64_t>()[0], 13);
  EXPECT_EQ(out.values<int64_t>()[1], -13);
  EXPECT_EQ(out.values<int64_t>()[2], 12);
}

TEST(EvalExpr, MatchesRowOracleProperty) {
  std::mt19937_64 rng(2024);
  auto schema = all_types_schema();
  for (int trial = 0; trial < 300; ++trial) {
    auto batch = all_types_batch(rng, 1 + rng() % 120, trial % 3 == 0 ? 0.0 : 0.25);
    auto e = trial % 2 ? testing::random_predicate(rng, schema, 3) : testing::random_value(rng, schema, 3);
    auto out = kernels::eval_expr(*e, batch);
    ASSERT_EQ(out.size(), batch.num_rows());
    ASSERT_EQ(out.type(), e->type);
    auto rows = oracle::to_rows(batch);
    for (size_t r = 0; r < rows.size(); ++r) {
      auto expect = oracle::eval_row(*e, rows[r]);
      ASSERT_TRUE(datum_close(out.datum(r), expect))
          << "trial " << trial << " row " << r << ": kernel " << format_datum(out.datum(r), e->type) << " oracle "
          << format_datum(expect, e->type);
    }
  }
}

// ---------------------------------------------------------------------- filter

TEST(Filter, TrueRowsOnly) {
  auto sel = kernels::filter(opt_bools({true, false, std::nullopt, true}));
  EXPECT_EQ(wide(sel), (std::vector<uint64_t>{0, 3}));
}

TEST(Filter, EmptyInput) { EXPECT_TRUE(kernels::filter(Column::empty(DataType::boolean())).empty()); }

TEST(Filter, MatchesScalarLoopProperty) {
  std::mt19937_64 rng(5);
  for (double density : {0.0, 0.3, 1.0}) {
    auto pred = testing::random_column(rng, {DataType::boolean(), density}, 10000);
    std::vector<uint64_t> expect;
    for (size_t i = 0; i < pred.size(); ++i) {
      if (pred.is_valid(i) && pred.values<uint8_t>()[i]) expect.push_back(i);
    }
    EXPECT_EQ(wide(kernels::filter(pred)), expect);
  }
}

// ------------------------------------------------------------------------ join

using Pair = std::pair<int64_t, int64_t>;

std::vector<Pair> pairs(const kernels::JoinResult& r, bool with_build) {
  std::vector<Pair> out;
  for (size_t i = 0; i < r.probe.size(); ++i) {
    int64_t b = !with_build ? -2 : (r.build.is_null(i) ? -1 : static_cast<int64_t>(r.build.at(i)));
    out.emplace_back(b, static_cast<int64_t>(r.probe.at(i)));
  }
  return out;
}

TEST(Join, DuplicateBuildKeys) {
  auto t = kernels::join_build({ints({1, 2, 2})});
  std::vector<Column> probe{ints({2})};
  auto r = kernels::join_probe(t, probe, JoinType::kInner);
  EXPECT_EQ(r.build.width(), IndexWidth::kNarrow);
  EXPECT_EQ(pairs(r, true), (std::vector<Pair>{{1, 0}, {2, 0}}));
}

TEST(Join, NullKeysNeverMatch) {
  auto t = kernels::join_build({opt_ints({std::nullopt, 1})});
  std::vector<Column> probe{opt_ints({std::nullopt, 1})};
  EXPECT_EQ(pairs(kernels::join_probe(t, probe, JoinType::kInner), true), (std::vector<Pair>{{1, 1}}));
  EXPECT_EQ(pairs(kernels::join_probe(t, probe, JoinType::kAnti), false), (std::vector<Pair>{{-2, 0}}));
  EXPECT_EQ(pairs(kernels::join_probe(t, probe, JoinType::kLeft), true), (std::vector<Pair>{{-1, 0}, {1, 1}}));
}

TEST(Join, EmptyBuildSide) {
  auto t = kernels::join_build({Column::empty(DataType::int64())});
  std::vector<Column> probe{ints({1, 2})};
  EXPECT_TRUE(kernels::join_probe(t, probe, JoinType::kInner).probe.empty());
  EXPECT_TRUE(kernels::join_probe(t, probe, JoinType::kSemi).probe.empty());
  EXPECT_EQ(kernels::join_probe(t, probe, JoinType::kAnti).probe.size(), 2u);
  auto left = kernels::join_probe(t, probe, JoinType::kLeft);
  ASSERT_EQ(left.probe.size(), 2u);
  EXPECT_TRUE(left.build.is_null(0) && left.build.is_null(1));
}

TEST(Join, InnerAndAntiOnSmallInput) {
  auto t = kernels::join_build({ints({1, 2})});
  std::vector<Column> probe{ints({2, 3})};
  EXPECT_EQ(pairs(kernels::join_probe(t, probe, JoinType::kInner), true), (std::vector<Pair>{{1, 0}}));
  EXPECT_EQ(pairs(kernels::join_probe(t, probe, JoinType::kAnti), false), (std::vector<Pair>{{-2, 1}}));
}

TEST(Join, StringAndDecimalKeys) {
  auto price = [](std::vector<int64_t> v) { return Column::make<int64_t>(DataType::decimal(12, 2), std::move(v)); };
  auto t = kernels::join_build({strs({"a", "b", "a"}), price({100, 100, 200})});
  std::vector<Column> probe{strs({"a", "a", "b"}), price({200, 100, 200})};
  EXPECT_EQ(pairs(kernels::join_probe(t, probe, JoinType::kInner), true), (std::vector<Pair>{{2, 0}, {0, 1}}));
}

TEST(Join, NarrowLimitOverflow) {
  std::vector<int64_t> keys(300, 7);
  auto t = kernels::join_build({ints(keys)});
  std::vector<Column> probe{ints({7})};
  try {
    kernels::join_probe(t, probe, JoinType::kInner, 255);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndexOverflow);
  }
  EXPECT_EQ(kernels::join_probe(t, probe, JoinType::kInner, 299).probe.size(), 300u);
}

TEST(Join, LoadFactorBounded) {
  std::vector<int64_t> keys(1000);
  for (size_t i = 0; i < keys.size(); ++i) keys[i] = static_cast<int64_t>(i);
  auto t = kernels::join_build({ints(keys)});
  EXPECT_LE(1000.0 / static_cast<double>(t.num_slots()), 0.7);
}

// Nested-loop reference: probe-major, build ascending within a probe row.
std::vector<Pair> nested_loop(const std::vector<oracle::Row>& build, const std::vector<oracle::Row>& probe, JoinType type) {
  std::vector<Pair> out;
  auto matches = [](const oracle::Row& a, const oracle::Row& b) {
    for (size_t k = 0; k < a.size(); ++k) {
      if (is_null(a[k]) || is_null(b[k]) || a[k] != b[k]) return false;
    }
    return true;
  };
  for (size_t p = 0; p < probe.size(); ++p) {
    bool any = false;
    for (size_t b = 0; b < build.size(); ++b) {
      if (!matches(build[b], probe[p])) continue;
      any = true;
      if (type == JoinType::kInner || type == JoinType::kLeft) out.emplace_back(static_cast<int64_t>(b), p);
    }
    if (type == JoinType::kLeft && !any) out.emplace_back(-1, p);
    if (type == JoinType::kSemi && any) out.emplace_back(-2, p);
    if (type == JoinType::kAnti && !any) out.emplace_back(-2, p);
  }
  return out;
}

TEST(Join, MatchesNestedLoopProperty) {
  std::mt19937_64 rng(99);
  std::vector<testing::RandomColumnSpec> specs{{DataType::int64(), 0.05, 30}, {DataType::string(), 0.05}};
  for (int trial = 0; trial < 4; ++trial) {
    auto build = testing::random_batch(rng, specs, 1000);
    auto probe = testing::random_batch(rng, specs, 1000);
    auto table = kernels::join_build(build.columns());
    auto build_rows = oracle::to_rows(build);
    auto probe_rows = oracle::to_rows(probe);
    for (auto type : {JoinType::kInner, JoinType::kLeft, JoinType::kSemi, JoinType::kAnti}) {
      auto r = kernels::join_probe(table, probe.columns(), type);
      bool with_build = type == JoinType::kInner || type == JoinType::kLeft;
      EXPECT_EQ(pairs(r, with_build), nested_loop(build_rows, probe_rows, type)) << static_cast<int>(type);
    }
  }
}

TEST(Join, SemiAntiPartitionProbeProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto build = testing::random_column(rng, {DataType::int64(), 0.1, 15}, rng() % 50);
    auto probe = testing::random_column(rng, {DataType::int64(), 0.1, 15}, rng() % 50);
    auto t = kernels::join_build({build});
    std::vector<Column> keys{probe};
    auto semi = wide(kernels::join_probe(t, keys, JoinType::kSemi).probe);
    auto anti = wide(kernels::join_probe(t, keys, JoinType::kAnti).probe);
    auto inner = wide(kernels::join_probe(t, keys, JoinType::kInner).probe);
    std::set<uint64_t> inner_set(inner.begin(), inner.end());
    EXPECT_EQ(std::vector<uint64_t>(inner_set.begin(), inner_set.end()), semi);
    std::vector<uint64_t> both = semi;
    both.insert(both.end(), anti.begin(), anti.end());
    std::sort(both.begin(), both.end());
    EXPECT_EQ(both.size(), probe.size());
    for (size_t i = 0; i < both.size(); ++i) EXPECT_EQ(both[i], i);
  }
}

// -------------------------------------------------------------------- group by

TEST(GroupBy, SumPerKey) {
  Batch b({ints({1, 1, 2}), ints({10, 20, 5})});
  std::vector<int> keys{0};
  std::vector<AggSpec> measures{{AggFn::kSum, 1}};
  auto out = kernels::group_by_sort(b, keys, measures, AggMode::kSingle);
  ASSERT_EQ(out.num_rows(), 2u);
  EXPECT_EQ(out.column(0).values<int64_t>()[0], 1);
  EXPECT_EQ(out.column(1).values<int64_t>()[0], 30);
  EXPECT_EQ(out.column(0).values<int64_t>()[1], 2);
  EXPECT_EQ(out.column(1).values<int64_t>()[1], 5);
}

TEST(GroupBy, EmptyInputWithKeysIsEmpty) {
  auto b = Batch({Column::empty(DataType::int64())});
  std::vector<int> keys{0};
  std::vector<AggSpec> measures{{AggFn::kCount, -1}};
  EXPECT_EQ(kernels::group_by_hash(b, keys, measures, AggMode::kSingle).num_rows(), 0u);
  EXPECT_EQ(kernels::group_by_sort(b, keys, measures, AggMode::kSingle).num_rows(), 0u);
}

TEST(GroupBy, StringKeysSortedByBytes) {
  Batch b({strs({"b", "a", "a"})});
  std::vector<int> keys{0};
  std::vector<AggSpec> measures{{AggFn::kCount, -1}};
  auto out = kernels::group_by_sort(b, keys, measures, AggMode::kSingle);
  ASSERT_EQ(out.num_rows(), 2u);
  EXPECT_EQ(out.column(0).string_at(0), "a");
  EXPECT_EQ(out.column(1).values<int64_t>()[0], 2);
  EXPECT_EQ(out.column(0).string_at(1), "b");
  EXPECT_EQ(out.column(1).values<int64_t>()[1], 1);
}

TEST(GroupBy, NullKeysFormOneGroup) {
  Batch b({opt_ints({std::nullopt, 1, std::nullopt}), ints({1, 2, 3})});
  std::vector<int> keys{0};
  std::vector<AggSpec> measures{{AggFn::kSum, 1}};
  auto out = kernels::group_by_sort(b, keys, measures, AggMode::kSingle);
  ASSERT_EQ(out.num_rows(), 2u);
  EXPECT_FALSE(out.column(0).is_valid(1));
  EXPECT_EQ(out.column(1).values<int64_t>()[1], 4);
}

TEST(GroupBy, AvgPartialLayout) {
  Batch b({ints({1, 1}), Column::make<int64_t>(DataType::decimal(12, 2), {150, 250})});
  std::vector<int> keys{0};
  std::vector<AggSpec> measures{{AggFn::kAvg, 1}};
  auto part = kernels::group_by_hash(b, keys, measures, AggMode::kPartial);
  ASSERT_EQ(part.num_columns(), 3u);
  EXPECT_EQ(part.column(1).type(), DataType::decimal(18, 2));
  EXPECT_EQ(part.column(1).values<int64_t>()[0], 400);
  EXPECT_EQ(part.column(2).values<int64_t>()[0], 2);
  std::vector<AggSpec> final_measures{{AggFn::kAvg, 1}};
  auto fin = kernels::group_by_hash(part, keys, final_measures, AggMode::kFinal);
  EXPECT_DOUBLE_EQ(fin.column(1).values<double>()[0], 2.0);
}

TEST(GroupBy, SumOverflowRaises) {
  Batch b({ints({1, 1}), ints({INT64_MAX, 1})});
  std::vector<int> keys{0};
  std::vector<AggSpec> measures{{AggFn::kSum, 1}};
  try {
    kernels::group_by_hash(b, keys, measures, AggMode::kSingle);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSumOverflow);
  }
}

// Single-phase oracle aggregation over rows.
Table oracle_group(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures) {
  std::map<oracle::Row, std::vector<oracle::AggAccumulator>> groups;
  auto types = b.types();
  for (const auto& row : oracle::to_rows(b)) {
    oracle::Row key;
    for (int k : keys) key.push_back(row[static_cast<size_t>(k)]);
    auto it = groups.find(key);
    if (it == groups.end()) {
      std::vector<oracle::AggAccumulator> accs;
      for (const auto& m : measures) {
        accs.emplace_back(m.fn, m.input < 0 ? DataType::int64() : types[static_cast<size_t>(m.input)]);
      }
      it = groups.emplace(key, std::move(accs)).first;
    }
    for (size_t m = 0; m < measures.size(); ++m) {
      bool star = measures[m].input < 0;
      it->second[m].add_raw(star ? Datum{} : row[static_cast<size_t>(measures[m].input)], star);
    }
  }
  std::vector<oracle::Row> rows;
  for (const auto& [key, accs] : groups) {
    auto row = key;
    for (const auto& a : accs) row.push_back(a.finish());
    rows.push_back(std::move(row));
  }
  std::vector<DataType> out_types;
  Schema schema;
  for (int k : keys) out_types.push_back(types[static_cast<size_t>(k)]);
  for (const auto& m : measures) {
    out_types.push_back(kernels::agg_output_types(m.fn, m.input < 0 ? DataType::int64() : types[static_cast<size_t>(m.input)],
                                                  AggMode::kSingle)[0]);
  }
  for (size_t i = 0; i < out_types.size(); ++i) schema.push_back({"c" + std::to_string(i), out_types[i], true});
  return testing::make_table("expect", schema, {oracle::from_rows(rows, out_types)});
}

Table as_table(const Batch& b) {
  Schema schema;
  for (size_t i = 0; i < b.num_columns(); ++i) schema.push_back({"c" + std::to_string(i), b.column(i).type(), true});
  return testing::make_table("got", schema, {b});
}

std::vector<AggSpec> every_measure(const std::vector<int>& inputs) {
  std::vector<AggSpec> out{{AggFn::kCount, -1}};
  for (int c : inputs) {
    for (auto fn : {AggFn::kSum, AggFn::kCount, AggFn::kMin, AggFn::kMax, AggFn::kAvg}) out.push_back({fn, c});
  }
  return out;
}

TEST(GroupBy, StrategiesMatchOracleProperty) {
  std::mt19937_64 rng(17);
  std::vector<testing::RandomColumnSpec> specs{{DataType::int64(), 0.1, 4},
                                               {DataType::string(), 0.1},
                                               {DataType::decimal(12, 2), 0.2},
                                               {DataType::float64(), 0.2},
                                               {DataType::int64(), 0.2, 1000}};
  std::vector<int> keys{0, 1};
  auto measures = every_measure({2, 3, 4});
  for (int trial = 0; trial < 20; ++trial) {
    auto b = testing::random_batch(rng, specs, rng() % 500);
    auto expect = oracle_group(b, keys, measures);
    auto by_hash = as_table(kernels::group_by_hash(b, keys, measures, AggMode::kSingle));
    auto by_sort = as_table(kernels::group_by_sort(b, keys, measures, AggMode::kSingle));
    std::string why;
    EXPECT_TRUE(testing::equivalent(by_hash, expect, 1e-9, &why)) << why;
    EXPECT_TRUE(testing::equivalent(by_sort, expect, 1e-9, &why)) << why;
    auto rows = oracle::to_rows(by_sort.combined());
    std::vector<SortKey> order{{0, true, false}, {1, true, false}};
    for (size_t r = 1; r < rows.size(); ++r) {
      EXPECT_LT(oracle::compare_keys(rows[r - 1], rows[r], order, by_sort.schema()), 0);
    }
  }
}

TEST(GroupBy, PartialMergeLawProperty) {
  std::mt19937_64 rng(23);
  std::vector<testing::RandomColumnSpec> specs{{DataType::int64(), 0.1, 5}, {DataType::decimal(12, 2), 0.2},
                                               {DataType::float64(), 0.2}, {DataType::string(), 0.2}};
  std::vector<int> keys{0};
  std::vector<AggSpec> raw{{AggFn::kCount, -1}, {AggFn::kSum, 1}, {AggFn::kAvg, 1}, {AggFn::kMin, 3},
                           {AggFn::kMax, 2},    {AggFn::kAvg, 2}, {AggFn::kCount, 3}};
  // Accumulator column ordinals of the partial layout (key at 0).
  std::vector<AggSpec> merged{{AggFn::kCount, 1}, {AggFn::kSum, 2}, {AggFn::kAvg, 3}, {AggFn::kMin, 5},
                              {AggFn::kMax, 6},   {AggFn::kAvg, 7}, {AggFn::kCount, 9}};
  for (int trial = 0; trial < 20; ++trial) {
    auto whole = testing::random_batch(rng, specs, rng() % 400);
    auto parts = rechunk(whole, 1 + rng() % 60);
    std::vector<Batch> partials;
    for (const auto& p : parts) {
      auto fn = trial % 2 ? kernels::group_by_hash : kernels::group_by_sort;
      partials.push_back(fn(p, keys, raw, AggMode::kPartial));
    }
    if (partials.empty()) continue;
    auto combined = kernels::group_by_hash(concat_batches(partials), keys, merged, AggMode::kCombine);
    auto finished = as_table(kernels::group_by_hash(combined, keys, merged, AggMode::kFinal));
    auto single = as_table(kernels::group_by_hash(whole, keys, raw, AggMode::kSingle));
    std::string why;
    EXPECT_TRUE(testing::equivalent(finished, single, 1e-9, &why)) << why;
  }
}

// ---------------------------------------------------------------------- reduce

TEST(Reduce, EmptyInputConventions) {
  auto b = Batch({Column::empty(DataType::int64())});
  std::vector<AggSpec> m{{AggFn::kCount, -1}, {AggFn::kCount, 0}, {AggFn::kSum, 0}, {AggFn::kMin, 0}, {AggFn::kAvg, 0}};
  auto out = kernels::reduce(b, m, AggMode::kSingle);
  ASSERT_EQ(out.num_rows(), 1u);
  EXPECT_EQ(out.column(0).datum(0), Datum(int64_t{0}));
  EXPECT_EQ(out.column(1).datum(0), Datum(int64_t{0}));
  EXPECT_FALSE(out.column(2).is_valid(0));
  EXPECT_FALSE(out.column(3).is_valid(0));
  EXPECT_FALSE(out.column(4).is_valid(0));
}

TEST(Reduce, SumAndMax) {
  Batch b({opt_ints({1, std::nullopt, 3})});
  std::vector<AggSpec> m{{AggFn::kSum, 0}, {AggFn::kMax, 0}, {AggFn::kCount, 0}, {AggFn::kCount, -1}};
  auto out = kernels::reduce(b, m, AggMode::kSingle);
  EXPECT_EQ(out.column(0).datum(0), Datum(int64_t{4}));
  EXPECT_EQ(out.column(1).datum(0), Datum(int64_t{3}));
  EXPECT_EQ(out.column(2).datum(0), Datum(int64_t{2}));
  EXPECT_EQ(out.column(3).datum(0), Datum(int64_t{3}));
}

TEST(Reduce, MatchesKeylessGroupOracleProperty) {
  std::mt19937_64 rng(31);
  std::vector<testing::RandomColumnSpec> specs{{DataType::decimal(12, 2), 0.3}, {DataType::float64(), 0.3},
                                               {DataType::string(), 0.3}};
  auto measures = every_measure({0, 1});
  measures.push_back({AggFn::kMin, 2});
  for (int trial = 0; trial < 20; ++trial) {
    auto b = testing::random_batch(rng, specs, 1 + rng() % 300);
    std::vector<int> none;
    auto expect = oracle_group(b, none, measures);
    std::string why;
    EXPECT_TRUE(testing::equivalent(as_table(kernels::reduce(b, measures, AggMode::kSingle)), expect, 1e-9, &why)) << why;
  }
}

// ------------------------------------------------------------------------ sort

TEST(Sort, Ascending) {
  Batch b({ints({3, 1, 2})});
  std::vector<SortKey> keys{{0, true, false}};
  EXPECT_EQ(wide(kernels::sort(b, keys)), (std::vector<uint64_t>{1, 2, 0}));
}

TEST(Sort, StableForTies) {
  Batch b({ints({1, 0, 1, 0})});
  std::vector<SortKey> keys{{0, true, false}};
  EXPECT_EQ(wide(kernels::sort(b, keys)), (std::vector<uint64_t>{1, 3, 0, 2}));
}

TEST(Sort, NullPlacement) {
  Batch b({opt_ints({2, std::nullopt, 1})});
  std::vector<SortKey> last{{0, true, false}};
  std::vector<SortKey> first{{0, false, true}};
  EXPECT_EQ(wide(kernels::sort(b, last)), (std::vector<uint64_t>{2, 0, 1}));
  EXPECT_EQ(wide(kernels::sort(b, first)), (std::vector<uint64_t>{1, 0, 2}));
}

TEST(Sort, MatchesStableOracleProperty) {
  std::mt19937_64 rng(41);
  auto schema = all_types_schema();
  for (int trial = 0; trial < 50; ++trial) {
    auto b = all_types_batch(rng, rng() % 300, 0.2);
    std::vector<SortKey> keys;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 3); ++k) {
      keys.push_back({static_cast<int>(rng() % schema.size()), rng() % 2 == 0, rng() % 2 == 0});
    }
    auto rows = oracle::to_rows(b);
    std::vector<uint64_t> expect(rows.size());
    for (size_t i = 0; i < expect.size(); ++i) expect[i] = i;
    std::stable_sort(expect.begin(), expect.end(),
                     [&](uint64_t x, uint64_t y) { return oracle::compare_keys(rows[x], rows[y], keys, schema) < 0; });
    EXPECT_EQ(wide(kernels::sort(b, keys)), expect) << "trial " << trial;
  }
}

// ----------------------------------------------------------------------- limit

TEST(Limit, TruncatesStream) {
  std::vector<Batch> stream{Batch({ints({1, 2, 3})}), Batch({ints({4, 5})})};
  auto out = kernels::limit(stream, 4);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].num_rows(), 1u);
  EXPECT_EQ(out[1].column(0).values<int64_t>()[0], 4);
  EXPECT_TRUE(kernels::limit(stream, 0).empty());
  auto all = kernels::limit(stream, 100);
  EXPECT_EQ(all.size(), 2u);
}

TEST(Limit, LimiterReportsDone) {
  kernels::Limiter l(2);
  auto first = l.push(Batch({ints({1})}));
  ASSERT_TRUE(first);
  EXPECT_FALSE(l.done());
  auto second = l.push(Batch({ints({2, 3})}));
  ASSERT_TRUE(second);
  EXPECT_EQ(second->num_rows(), 1u);
  EXPECT_TRUE(l.done());
  EXPECT_FALSE(l.push(Batch({ints({4})})));
}

// ------------------------------------------------------------------------ hash

TEST(Hash, NullHashesToZero) {
  auto c = opt_ints({std::nullopt});
  EXPECT_EQ(kernels::hash_value(c, 0), 0u);
}

TEST(Hash, Int64IsFnvOfLittleEndianBytes) {
  int64_t v = 7;
  uint8_t bytes[8];
  std::memcpy(bytes, &v, 8);
  EXPECT_EQ(kernels::hash_value(ints({7}), 0), kernels::fnv1a(bytes, 8, kernels::kFnvOffset));
}

TEST(Hash, RowCombination) {
  auto a = ints({1});
  auto b = strs({"x"});
  std::vector<Column> cols{a, b};
  uint64_t expect = kernels::hash_value(a, 0) * 31 + kernels::hash_value(b, 0);
  EXPECT_EQ(kernels::hash_rows(cols)[0], expect);
}

TEST(Hash, NegativeZeroMatchesZero) {
  auto c = Column::make<double>(DataType::float64(), {0.0, -0.0});
  EXPECT_EQ(kernels::hash_value(c, 0), kernels::hash_value(c, 1));
}

// --------------------------------------------------------------------- backend

TEST(Backend, RegistryKnowsBothImplementations) {
  oracle::register_reference_backend();
  auto names = kernels::backend_names();
  EXPECT_NE(std::find(names.begin(), names.end(), "vectorized"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "reference"), names.end());
  EXPECT_THROW(kernels::make_backend("gpu"), Error);
}

TEST(Backend, ReferenceMatchesVectorizedProperty) {
  oracle::register_reference_backend();
  auto fast = kernels::make_backend("vectorized");
  auto slow = kernels::make_backend("reference");
  std::mt19937_64 rng(77);
  auto schema = all_types_schema();
  for (int trial = 0; trial < 20; ++trial) {
    auto b = all_types_batch(rng, rng() % 200, 0.2);
    auto pred = testing::random_predicate(rng, schema, 2);
    auto p1 = fast->eval_expr(*pred, b);
    auto p2 = slow->eval_expr(*pred, b);
    ASSERT_EQ(p1.size(), p2.size());
    for (size_t r = 0; r < p1.size(); ++r) EXPECT_EQ(p1.datum(r), p2.datum(r)) << "row " << r;
    EXPECT_EQ(wide(fast->filter(p1)), wide(slow->filter(p2)));

    std::vector<Column> bk{b.column(0)};
    std::vector<Column> pk{b.column(6)};
    for (auto type : {JoinType::kInner, JoinType::kLeft, JoinType::kSemi, JoinType::kAnti}) {
      auto r1 = fast->join_probe(*fast->join_build(bk), pk, type, SelectionVector::kDefaultNarrowLimit);
      auto r2 = slow->join_probe(*slow->join_build(bk), pk, type, SelectionVector::kDefaultNarrowLimit);
      bool with_build = type == JoinType::kInner || type == JoinType::kLeft;
      EXPECT_EQ(pairs(r1, with_build), pairs(r2, with_build));
    }

    std::vector<int> keys{5};
    std::vector<AggSpec> measures{{AggFn::kSum, 2}, {AggFn::kMin, 3}, {AggFn::kCount, -1}};
    auto g1 = as_table(fast->group_by_sort(b, keys, measures, AggMode::kSingle));
    auto g2 = as_table(slow->group_by_sort(b, keys, measures, AggMode::kSingle));
    std::string why;
    EXPECT_TRUE(testing::equal_in_order(g1, g2, 0.0, &why)) << why;
    std::vector<SortKey> sk{{5, true, false}, {0, false, true}};
    EXPECT_EQ(wide(fast->sort(b, sk)), wide(slow->sort(b, sk)));
  }
}

TEST(Backend, JoinIndexFromOtherBackendRejected) {
  oracle::register_reference_backend();
  auto fast = kernels::make_backend("vectorized");
  auto slow = kernels::make_backend("reference");
  std::vector<Column> keys{ints({1})};
  auto idx = slow->join_build(keys);
  EXPECT_THROW(fast->join_probe(*idx, keys, JoinType::kInner, SelectionVector::kDefaultNarrowLimit), Error);
}

}  // namespace
}  // namespace siriette
