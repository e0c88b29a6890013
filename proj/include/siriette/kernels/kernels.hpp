#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "siriette/columnar/batch.hpp"
#include "siriette/plan/plan.hpp"

namespace siriette::kernels {

using plan::AggFn;
using plan::JoinType;
using plan::SortKey;

Column eval_expr(const plan::Expr& e, const Batch& b);

// Numeric narrowing rounds half away from zero; out-of-range values raise
// ArithmeticOverflow.
Column cast_column(const Column& c, const DataType& to);

// Ascending indices of rows where the predicate is true.
SelectionVector filter(const Column& predicate);

struct JoinResult;

// Frozen build side of a hash join; backends supply their own layouts.
class JoinIndex {
 public:
  virtual ~JoinIndex() = default;
  virtual size_t num_rows() const = 0;
  virtual size_t byte_size() const = 0;
};

class JoinTable : public JoinIndex {
 public:
  JoinTable() = default;
  explicit JoinTable(std::vector<Column> keys);

  size_t num_rows() const override { return rows_; }
  size_t num_slots() const { return slots_.size(); }
  const std::vector<Column>& keys() const { return keys_; }

  size_t byte_size() const override;

 private:
  friend JoinResult join_probe(const JoinTable&, std::span<const Column>, JoinType, uint64_t);

  std::vector<Column> keys_;
  size_t rows_ = 0;
  // Open addressing over distinct key hashes; each slot owns a chain of build
  // rows (ascending) linked through next_.
  std::vector<uint64_t> slot_hash_;
  std::vector<int64_t> slots_;  // first row of chain, -1 when empty
  std::vector<int64_t> next_;
  uint64_t mask_ = 0;
};

JoinTable join_build(std::vector<Column> keys);

struct JoinResult {
  SelectionVector build;  // inner/left only; left pads with the null sentinel
  SelectionVector probe;
};

// Probe-major output. Indices above `narrow_limit` raise IndexOverflow.
JoinResult join_probe(const JoinTable& t, std::span<const Column> probe_keys, JoinType type,
                      uint64_t narrow_limit = SelectionVector::kDefaultNarrowLimit);

// single: raw rows to finished values. partial: raw rows to accumulators.
// combine: accumulators to accumulators. final: accumulators to finished values.
enum class AggMode { kSingle, kPartial, kCombine, kFinal };

// `input` is a column ordinal of the kernel's input batch, or -1 for count(*).
// In combine/final mode it names the accumulator column (avg: sum then count).
struct AggSpec {
  AggFn fn = AggFn::kCount;
  int input = -1;
};

// Output: key columns, then per measure its finished value (single/final) or
// accumulator columns (partial/combine).
Batch group_by_hash(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures, AggMode mode);
// Same multiset as group_by_hash; rows sorted by keys ascending, nulls last.
Batch group_by_sort(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures, AggMode mode);
// Single output row, also for empty input.
Batch reduce(const Batch& b, std::span<const AggSpec> measures, AggMode mode);

// Stable sort permutation.
SelectionVector sort(const Batch& b, std::span<const SortKey> keys);

// Truncates a batch stream to its first n rows.
class Limiter {
 public:
  explicit Limiter(uint64_t n) : remaining_(n) {}
  // Empty optional once the limit is exhausted.
  std::optional<Batch> push(const Batch& b);
  bool done() const { return remaining_ == 0; }

 private:
  uint64_t remaining_;
};

std::vector<Batch> limit(std::span<const Batch> stream, uint64_t n);

// Accumulator/finished output types for one measure.
std::vector<DataType> agg_output_types(AggFn fn, const DataType& input, AggMode mode);

}  // namespace siriette::kernels
