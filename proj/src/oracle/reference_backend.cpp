#include "siriette/oracle/reference_backend.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "siriette/oracle/scalar.hpp"

namespace siriette::oracle {

using kernels::AggMode;
using kernels::AggSpec;
using kernels::JoinResult;

namespace {

class RefJoinIndex final : public kernels::JoinIndex {
 public:
  explicit RefJoinIndex(std::vector<Column> keys) {
    rows_ = keys.empty() ? 0 : keys[0].size();
    for (size_t r = 0; r < rows_; ++r) {
      Row key;
      bool null_key = false;
      for (const auto& k : keys) {
        key.push_back(k.datum(r));
        null_key = null_key || is_null(key.back());
      }
      if (!null_key) index_[key].push_back(r);
    }
  }
  size_t num_rows() const override { return rows_; }
  size_t byte_size() const override { return rows_ * sizeof(uint64_t); }

  const std::vector<size_t>* find(const Row& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &it->second;
  }

 private:
  size_t rows_ = 0;
  std::map<Row, std::vector<size_t>> index_;
};

// Group order of group_by_sort: ascending per key, nulls last.
struct NullsLast {
  bool operator()(const Row& a, const Row& b) const {
    for (size_t i = 0; i < a.size(); ++i) {
      bool an = is_null(a[i]);
      bool bn = is_null(b[i]);
      if (an != bn) return bn;
      if (!an && a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }
};

bool raw(AggMode m) { return m == AggMode::kSingle || m == AggMode::kPartial; }
bool finishing(AggMode m) { return m == AggMode::kSingle || m == AggMode::kFinal; }

Batch aggregate(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures, AggMode mode) {
  auto rows = to_rows(b);
  std::vector<DataType> in_types;
  for (const auto& m : measures) {
    in_types.push_back(m.input >= 0 ? b.column(static_cast<size_t>(m.input)).type() : DataType::int64());
  }
  auto fresh = [&] {
    std::vector<AggAccumulator> accs;
    for (size_t i = 0; i < measures.size(); ++i) accs.emplace_back(measures[i].fn, in_types[i]);
    return accs;
  };
  std::map<Row, std::vector<AggAccumulator>, NullsLast> groups;
  if (keys.empty()) groups.emplace(Row{}, fresh());
  for (const auto& row : rows) {
    Row key;
    for (int k : keys) key.push_back(row[static_cast<size_t>(k)]);
    auto it = groups.find(key);
    if (it == groups.end()) it = groups.emplace(std::move(key), fresh()).first;
    for (size_t i = 0; i < measures.size(); ++i) {
      const auto& m = measures[i];
      if (raw(mode)) {
        it->second[i].add_raw(m.input >= 0 ? row[static_cast<size_t>(m.input)] : Datum{}, m.input < 0);
      } else {
        auto c = static_cast<size_t>(m.input);
        it->second[i].add_partial(row[c], m.fn == plan::AggFn::kAvg ? row[c + 1] : Datum{});
      }
    }
  }
  std::vector<DataType> types;
  for (int k : keys) types.push_back(b.column(static_cast<size_t>(k)).type());
  for (size_t i = 0; i < measures.size(); ++i) {
    for (auto t : kernels::agg_output_types(measures[i].fn, in_types[i], mode)) types.push_back(t);
  }
  std::vector<Row> out;
  for (const auto& [key, accs] : groups) {
    Row row = key;
    for (const auto& acc : accs) {
      if (finishing(mode)) {
        row.push_back(acc.finish());
      } else {
        auto p = acc.partial();
        row.insert(row.end(), p.begin(), p.end());
      }
    }
    out.push_back(std::move(row));
  }
  return from_rows(out, types);
}

class Reference final : public kernels::KernelBackend {
 public:
  std::string name() const override { return "reference"; }

  Column eval_expr(const plan::Expr& e, const Batch& b) const override {
    auto rows = to_rows(b);
    std::vector<Datum> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(eval_row(e, r));
    return Column::from_datums(e.type, out);
  }

  SelectionVector filter(const Column& predicate) const override {
    std::vector<uint64_t> out;
    for (size_t i = 0; i < predicate.size(); ++i) {
      auto d = predicate.datum(i);
      if (!is_null(d) && std::get<bool>(d)) out.push_back(i);
    }
    return SelectionVector::wide(std::move(out));
  }

  std::shared_ptr<const kernels::JoinIndex> join_build(std::vector<Column> keys) const override {
    return std::make_shared<const RefJoinIndex>(std::move(keys));
  }

  JoinResult join_probe(const kernels::JoinIndex& index, std::span<const Column> probe_keys, plan::JoinType type,
                        uint64_t narrow_limit) const override {
    const auto* ref = dynamic_cast<const RefJoinIndex*>(&index);
    if (!ref) raise(ErrorCode::kInternal, "join index built by another backend");
    size_t n = probe_keys.empty() ? 0 : probe_keys[0].size();
    std::vector<uint64_t> build, probe;
    for (size_t r = 0; r < n; ++r) {
      Row key;
      for (const auto& k : probe_keys) key.push_back(k.datum(r));
      const auto* hits = ref->find(key);
      bool any = hits && !hits->empty();
      switch (type) {
        case plan::JoinType::kInner:
        case plan::JoinType::kLeft:
          if (any) {
            for (size_t b : *hits) {
              build.push_back(b);
              probe.push_back(r);
            }
          } else if (type == plan::JoinType::kLeft) {
            build.push_back(SelectionVector::kNullWide);
            probe.push_back(r);
          }
          break;
        case plan::JoinType::kSemi:
          if (any) probe.push_back(r);
          break;
        case plan::JoinType::kAnti:
          if (!any) probe.push_back(r);
          break;
      }
    }
    JoinResult out;
    out.build = narrow_indices(SelectionVector::wide(std::move(build)), narrow_limit);
    out.probe = narrow_indices(SelectionVector::wide(std::move(probe)), narrow_limit);
    return out;
  }

  Batch group_by_hash(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures,
                      AggMode mode) const override {
    return aggregate(b, keys, measures, mode);
  }
  Batch group_by_sort(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures,
                      AggMode mode) const override {
    return aggregate(b, keys, measures, mode);
  }
  Batch reduce(const Batch& b, std::span<const AggSpec> measures, AggMode mode) const override {
    return aggregate(b, {}, measures, mode);
  }

  SelectionVector sort(const Batch& b, std::span<const plan::SortKey> keys) const override {
    auto rows = to_rows(b);
    Schema schema;
    for (const auto& t : b.types()) schema.push_back(Field{"", t, true});
    std::vector<plan::SortKey> k(keys.begin(), keys.end());
    std::vector<uint64_t> perm(rows.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](uint64_t x, uint64_t y) { return compare_keys(rows[x], rows[y], k, schema) < 0; });
    return SelectionVector::wide(std::move(perm));
  }
};

}  // namespace

std::shared_ptr<const kernels::KernelBackend> reference_backend() {
  static auto backend = std::make_shared<const Reference>();
  return backend;
}

void register_reference_backend() {
  kernels::register_backend("reference", [] { return reference_backend(); });
}

}  // namespace siriette::oracle
