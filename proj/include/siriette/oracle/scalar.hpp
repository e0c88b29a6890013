#pragma once

#include <string_view>
#include <vector>

#include "siriette/columnar/batch.hpp"
#include "siriette/plan/plan.hpp"

namespace siriette::oracle {

using Row = std::vector<Datum>;

// Row-at-a-time expression semantics; the reference the kernels are held to.
Datum eval_row(const plan::Expr& e, const Row& row);

// Three-way comparison of two non-null values of comparable types.
int compare_values(const Datum& a, const DataType& at, const Datum& b, const DataType& bt);

// Total order for sort keys: nulls placed per `nulls_first`, then by value.
int compare_keys(const Row& a, const Row& b, const std::vector<plan::SortKey>& keys, const Schema& schema);

bool like_match(std::string_view pattern, std::string_view s);

Datum cast_value(const Datum& v, const DataType& from, const DataType& to);

// Per-group aggregate accumulator shared by the oracle executor and the
// reference kernel backend.
class AggAccumulator {
 public:
  AggAccumulator(plan::AggFn fn, DataType input) : fn_(fn), type_(input) {}

  // One raw input value (null for count(*) is ignored via `star`).
  void add_raw(const Datum& v, bool star = false);
  // One accumulator tuple from a partial layout; `count` only for avg.
  void add_partial(const Datum& acc, const Datum& count = {});

  // Accumulator columns (partial layout) or the finished value.
  Row partial() const;
  Datum finish() const;

 private:
  void add_sum(const Datum& v);
  void add_extreme(const Datum& v);

  plan::AggFn fn_;
  DataType type_;
  __int128 isum_ = 0;
  double dsum_ = 0.0;
  int64_t count_ = 0;
  bool has_ = false;
  Datum extreme_;
};

std::vector<Row> to_rows(const Batch& b);
std::vector<Row> to_rows(const Table& t);
Batch from_rows(const std::vector<Row>& rows, std::span<const DataType> types);

}  // namespace siriette::oracle
