#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

#include "siriette/kernels/hash.hpp"
#include "siriette/kernels/kernels.hpp"
#include "siriette/kernels/rows.hpp"
#include "siriette/plan/validate.hpp"

namespace siriette::kernels {

std::vector<DataType> agg_output_types(AggFn fn, const DataType& input, AggMode mode) {
  switch (mode) {
    case AggMode::kSingle: return {plan::aggregate_result_type(fn, input)};
    case AggMode::kPartial: return plan::partial_accumulator_types(fn, input);
    case AggMode::kCombine:
      if (fn == AggFn::kAvg) return {input, DataType::int64()};
      return {fn == AggFn::kCount ? DataType::int64() : input};
    case AggMode::kFinal:
      if (fn == AggFn::kAvg) return {DataType::float64()};
      return {fn == AggFn::kCount ? DataType::int64() : input};
  }
  return {};
}

namespace {

bool raw_mode(AggMode m) { return m == AggMode::kSingle || m == AggMode::kPartial; }
bool finishing(AggMode m) { return m == AggMode::kSingle || m == AggMode::kFinal; }

// Accumulators of one measure across all groups.
class Accumulator {
 public:
  Accumulator(const AggSpec& spec, AggMode mode, const Batch& b) : fn_(spec.fn), mode_(mode) {
    if (spec.input >= 0) {
      in0_ = &b.column(static_cast<size_t>(spec.input));
      type_ = in0_->type();
      if (fn_ == AggFn::kAvg && !raw_mode(mode)) in1_ = &b.column(static_cast<size_t>(spec.input) + 1);
    } else if (fn_ != AggFn::kCount) {
      raise(ErrorCode::kInternal, "measure without input");
    }
    if (in0_) {
      switch (type_.id) {
        case TypeId::kInt64:
        case TypeId::kDecimal: i64_ = in0_->values<int64_t>().data(); break;
        case TypeId::kFloat64: f64_ = in0_->values<double>().data(); break;
        case TypeId::kDate32: i32_ = in0_->values<int32_t>().data(); break;
        case TypeId::kBool: u8_ = in0_->values<uint8_t>().data(); break;
        case TypeId::kString: break;
      }
    }
    if (in1_) cnt_in_ = in1_->values<int64_t>().data();
  }

  void resize(size_t groups) {
    count_.resize(groups, 0);
    has_.resize(groups, 0);
    if (fn_ == AggFn::kSum || fn_ == AggFn::kAvg) {
      if (type_.id == TypeId::kFloat64) {
        dsum_.resize(groups, 0.0);
      } else {
        isum_.resize(groups, 0);
      }
    }
    if (fn_ == AggFn::kMin || fn_ == AggFn::kMax) {
      if (type_.id == TypeId::kFloat64) {
        dext_.resize(groups, 0.0);
      } else if (type_.id == TypeId::kString) {
        sext_.resize(groups);
      } else {
        iext_.resize(groups, 0);
      }
    }
  }

  void update(size_t row, size_t g) {
    if (fn_ == AggFn::kCount) {
      if (!raw_mode(mode_)) {
        count_[g] += i64_[row];
      } else if (!in0_ || in0_->is_valid(row)) {
        ++count_[g];
      }
      return;
    }
    bool valid = in0_->is_valid(row);
    if (fn_ == AggFn::kAvg && !raw_mode(mode_)) count_[g] += cnt_in_[row];
    if (!valid) return;
    switch (fn_) {
      case AggFn::kSum:
      case AggFn::kAvg:
        if (f64_) {
          dsum_[g] += f64_[row];
        } else if (__builtin_add_overflow(isum_[g], static_cast<__int128>(i64_[row]), &isum_[g])) {
          raise(ErrorCode::kSumOverflow, "sum accumulator overflow");
        }
        if (raw_mode(mode_)) ++count_[g];
        break;
      case AggFn::kMin:
      case AggFn::kMax: update_extreme(row, g); break;
      case AggFn::kCount: break;
    }
    has_[g] = 1;
  }

  void emit(std::vector<Column>& out) const {
    size_t groups = count_.size();
    if (fn_ == AggFn::kCount) {
      out.push_back(Column::make<int64_t>(DataType::int64(), count_));
      return;
    }
    auto types = agg_output_types(fn_, type_, mode_);
    Bitmap bits = validity(groups);
    switch (fn_) {
      case AggFn::kSum: out.push_back(sum_column(types[0], bits)); break;
      case AggFn::kAvg:
        if (finishing(mode_)) {
          std::vector<double> v(groups, 0.0);
          Bitmap vb(bitmap::bytes_for(groups), 0);
          bool any_null = false;
          double div = type_.id == TypeId::kDecimal ? static_cast<double>(pow10_i64(type_.scale)) : 1.0;
          for (size_t g = 0; g < groups; ++g) {
            if (count_[g] == 0) {
              any_null = true;
              continue;
            }
            double sum = type_.id == TypeId::kFloat64 ? dsum_[g] : static_cast<double>(isum_[g]) / div;
            v[g] = sum / static_cast<double>(count_[g]);
            bitmap::set(vb.data(), g, true);
          }
          out.push_back(Column::make<double>(DataType::float64(), std::move(v), any_null ? std::move(vb) : Bitmap{}));
        } else {
          out.push_back(sum_column(types[0], bits));
          out.push_back(Column::make<int64_t>(DataType::int64(), count_));
        }
        break;
      case AggFn::kMin:
      case AggFn::kMax: out.push_back(extreme_column(bits)); break;
      case AggFn::kCount: break;
    }
  }

 private:
  void update_extreme(size_t row, size_t g) {
    bool first = !has_[g];
    bool want_less = fn_ == AggFn::kMin;
    switch (type_.id) {
      case TypeId::kFloat64: {
        double v = f64_[row];
        if (first || (want_less ? v < dext_[g] : v > dext_[g])) dext_[g] = v;
        break;
      }
      case TypeId::kString: {
        auto v = in0_->string_at(row);
        if (first || (want_less ? v < sext_[g] : v > sext_[g])) sext_[g].assign(v);
        break;
      }
      default: {
        int64_t v = i64_ ? i64_[row] : (i32_ ? i32_[row] : (u8_[row] != 0));
        if (first || (want_less ? v < iext_[g] : v > iext_[g])) iext_[g] = v;
        break;
      }
    }
  }

  Bitmap validity(size_t groups) const {
    if (std::all_of(has_.begin(), has_.end(), [](uint8_t h) { return h != 0; })) return {};
    Bitmap bits(bitmap::bytes_for(groups), 0);
    for (size_t g = 0; g < groups; ++g) {
      if (has_[g]) bitmap::set(bits.data(), g, true);
    }
    return bits;
  }

  Column sum_column(const DataType& t, const Bitmap& bits) const {
    if (t.id == TypeId::kFloat64) return Column::make<double>(t, dsum_, bits);
    std::vector<int64_t> v(isum_.size());
    for (size_t g = 0; g < v.size(); ++g) {
      if (isum_[g] > std::numeric_limits<int64_t>::max() || isum_[g] < std::numeric_limits<int64_t>::min()) {
        raise(ErrorCode::kSumOverflow, "sum exceeds the 64-bit result range");
      }
      v[g] = static_cast<int64_t>(isum_[g]);
    }
    return Column::make<int64_t>(t, std::move(v), bits);
  }

  Column extreme_column(const Bitmap& bits) const {
    switch (type_.id) {
      case TypeId::kFloat64: return Column::make<double>(type_, dext_, bits);
      case TypeId::kString: {
        StringData data;
        data.offsets.reserve(sext_.size() + 1);
        for (const auto& s : sext_) {
          data.bytes += s;
          data.offsets.push_back(static_cast<int64_t>(data.bytes.size()));
        }
        return Column::make_strings(std::move(data), bits);
      }
      case TypeId::kDate32: {
        std::vector<int32_t> v(iext_.begin(), iext_.end());
        return Column::make<int32_t>(type_, std::move(v), bits);
      }
      case TypeId::kBool: {
        std::vector<uint8_t> v(iext_.begin(), iext_.end());
        return Column::make<uint8_t>(type_, std::move(v), bits);
      }
      default: return Column::make<int64_t>(type_, iext_, bits);
    }
  }

  AggFn fn_;
  AggMode mode_;
  DataType type_{};
  const Column* in0_ = nullptr;
  const Column* in1_ = nullptr;
  const int64_t* i64_ = nullptr;
  const double* f64_ = nullptr;
  const int32_t* i32_ = nullptr;
  const uint8_t* u8_ = nullptr;
  const int64_t* cnt_in_ = nullptr;

  std::vector<int64_t> count_;
  std::vector<uint8_t> has_;
  std::vector<__int128> isum_;
  std::vector<double> dsum_;
  std::vector<int64_t> iext_;
  std::vector<double> dext_;
  std::vector<std::string> sext_;
};

struct Grouping {
  std::vector<uint32_t> group_of_row;
  std::vector<uint64_t> first_row;  // per group, in output order
};

Grouping group_hash(std::span<const Column> keys, size_t n) {
  Grouping out;
  out.group_of_row.resize(n);
  auto hashes = hash_rows(keys);
  std::vector<ColumnView> views;
  for (const auto& k : keys) views.emplace_back(k);
  size_t cap = std::bit_ceil(std::max<size_t>(16, n * 10 / 7 + 1));
  size_t mask = cap - 1;
  std::vector<int64_t> slots(cap, -1);
  std::vector<uint64_t> slot_hash(cap, 0);
  for (size_t r = 0; r < n; ++r) {
    uint64_t h = hashes[r];
    size_t s = h & mask;
    while (true) {
      if (slots[s] == -1) {
        slots[s] = static_cast<int64_t>(out.first_row.size());
        slot_hash[s] = h;
        out.first_row.push_back(r);
        break;
      }
      if (slot_hash[s] == h) {
        size_t first = out.first_row[static_cast<size_t>(slots[s])];
        bool eq = true;
        for (size_t k = 0; k < views.size() && eq; ++k) eq = views[k].equal(r, views[k], first);
        if (eq) break;
      }
      s = (s + 1) & mask;
    }
    out.group_of_row[r] = static_cast<uint32_t>(slots[s]);
  }
  return out;
}

std::vector<OrderedKey> ordered(std::span<const Column> cols, std::span<const SortKey> keys) {
  std::vector<OrderedKey> out;
  for (size_t i = 0; i < keys.size(); ++i) {
    out.push_back({ColumnView(cols[i]), keys[i].ascending, keys[i].nulls_first});
  }
  return out;
}

Grouping group_sort(std::span<const Column> keys, size_t n) {
  std::vector<SortKey> asc(keys.size());
  for (size_t k = 0; k < asc.size(); ++k) asc[k] = SortKey{static_cast<int>(k), true, false};
  auto ok = ordered(keys, asc);
  std::vector<uint64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](uint64_t a, uint64_t b) { return compare_rows(ok, a, ok, b) < 0; });
  Grouping out;
  out.group_of_row.resize(n);
  for (size_t i = 0; i < n; ++i) {
    if (i == 0 || compare_rows(ok, perm[i - 1], ok, perm[i]) != 0) out.first_row.push_back(perm[i]);
    out.group_of_row[perm[i]] = static_cast<uint32_t>(out.first_row.size() - 1);
  }
  return out;
}

Batch aggregate(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures, AggMode mode,
                const Grouping& grouping) {
  size_t groups = grouping.first_row.size();
  std::vector<Accumulator> accs;
  accs.reserve(measures.size());
  for (const auto& m : measures) {
    accs.emplace_back(m, mode, b);
    accs.back().resize(groups);
  }
  size_t n = b.num_rows();
  for (auto& acc : accs) {
    for (size_t r = 0; r < n; ++r) acc.update(r, grouping.group_of_row[r]);
  }
  std::vector<Column> out;
  auto sel = SelectionVector::wide(grouping.first_row);
  for (int k : keys) out.push_back(gather(b.column(static_cast<size_t>(k)), sel));
  for (const auto& acc : accs) acc.emit(out);
  return Batch(std::move(out), groups);
}

std::vector<Column> key_columns(const Batch& b, std::span<const int> keys) {
  std::vector<Column> out;
  for (int k : keys) out.push_back(b.column(static_cast<size_t>(k)));
  return out;
}

}  // namespace

Batch group_by_hash(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures, AggMode mode) {
  if (keys.empty()) return reduce(b, measures, mode);
  auto cols = key_columns(b, keys);
  return aggregate(b, keys, measures, mode, group_hash(cols, b.num_rows()));
}

Batch group_by_sort(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures, AggMode mode) {
  if (keys.empty()) return reduce(b, measures, mode);
  auto cols = key_columns(b, keys);
  return aggregate(b, keys, measures, mode, group_sort(cols, b.num_rows()));
}

Batch reduce(const Batch& b, std::span<const AggSpec> measures, AggMode mode) {
  Grouping g;
  g.group_of_row.assign(b.num_rows(), 0);
  g.first_row = {0};
  return aggregate(b, {}, measures, mode, g);
}

SelectionVector sort(const Batch& b, std::span<const SortKey> keys) {
  std::vector<Column> cols;
  for (const auto& k : keys) cols.push_back(b.column(static_cast<size_t>(k.column)));
  auto ok = ordered(cols, keys);
  std::vector<uint64_t> perm(b.num_rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](uint64_t x, uint64_t y) { return compare_rows(ok, x, ok, y) < 0; });
  return SelectionVector::wide(std::move(perm));
}

std::optional<Batch> Limiter::push(const Batch& b) {
  if (remaining_ == 0) return std::nullopt;
  if (b.num_rows() <= remaining_) {
    remaining_ -= b.num_rows();
    return b;
  }
  auto out = slice(b, 0, remaining_);
  remaining_ = 0;
  return out;
}

std::vector<Batch> limit(std::span<const Batch> stream, uint64_t n) {
  Limiter lim(n);
  std::vector<Batch> out;
  for (const auto& b : stream) {
    auto r = lim.push(b);
    if (!r) break;
    if (r->num_rows() > 0) out.push_back(std::move(*r));
  }
  return out;
}

}  // namespace siriette::kernels
