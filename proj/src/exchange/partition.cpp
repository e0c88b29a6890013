#include <queue>

#include "siriette/exchange/exchange.hpp"
#include "siriette/kernels/hash.hpp"
#include "siriette/kernels/rows.hpp"

namespace siriette::exchange {

std::vector<Batch> partition_batch(const Batch& b, std::span<const int> keys, size_t n) {
  if (n == 0) raise(ErrorCode::kInvalidArgument, "partition fanout must be at least 1");
  if (n == 1) return {b};
  std::vector<Column> key_cols;
  for (int k : keys) key_cols.push_back(b.column(static_cast<size_t>(k)));
  auto hashes = kernels::hash_rows(key_cols);
  std::vector<std::vector<uint64_t>> rows(n);
  for (size_t r = 0; r < b.num_rows(); ++r) rows[hashes[r] % n].push_back(r);
  std::vector<Batch> out;
  out.reserve(n);
  for (auto& idx : rows) out.push_back(gather(b, SelectionVector::wide(std::move(idx))));
  return out;
}

Batch merge_sorted(std::span<const Batch> runs, std::span<const plan::SortKey> keys) {
  if (runs.empty()) raise(ErrorCode::kInvalidArgument, "merge of zero runs");
  auto all = concat_batches(runs);
  std::vector<kernels::OrderedKey> ordered;
  for (const auto& k : keys) {
    ordered.push_back({kernels::ColumnView(all.column(static_cast<size_t>(k.column))), k.ascending, k.nulls_first});
  }
  struct Cursor {
    size_t run;
    size_t row;  // global row in `all`
    size_t end;
  };
  auto later = [&](const Cursor& a, const Cursor& b) {
    int c = kernels::compare_rows(ordered, a.row, ordered, b.row);
    if (c != 0) return c > 0;
    return a.run > b.run;
  };
  std::priority_queue<Cursor, std::vector<Cursor>, decltype(later)> heap(later);
  size_t offset = 0;
  for (size_t i = 0; i < runs.size(); ++i) {
    size_t n = runs[i].num_rows();
    if (n > 0) heap.push({i, offset, offset + n});
    offset += n;
  }
  std::vector<uint64_t> order;
  order.reserve(all.num_rows());
  while (!heap.empty()) {
    auto c = heap.top();
    heap.pop();
    order.push_back(c.row);
    if (++c.row < c.end) heap.push(c);
  }
  return gather(all, SelectionVector::wide(std::move(order)));
}

}  // namespace siriette::exchange
