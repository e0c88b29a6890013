#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "siriette/columnar/column.hpp"

namespace siriette::kernels {

// Typed, pointer-level view of one column for row comparisons.
class ColumnView {
 public:
  explicit ColumnView(const Column& c);

  bool valid(size_t i) const { return !bits_ || bitmap::get(bits_, i); }

  // Three-way value comparison of two valid rows (possibly of another view of
  // the same type).
  int compare(size_t a, const ColumnView& other, size_t b) const {
    switch (id_) {
      case TypeId::kInt64:
      case TypeId::kDecimal: return cmp(i64_[a], other.i64_[b]);
      case TypeId::kFloat64: return cmp(f64_[a], other.f64_[b]);
      case TypeId::kDate32: return cmp(i32_[a], other.i32_[b]);
      case TypeId::kBool: return cmp(u8_[a] != 0, other.u8_[b] != 0);
      case TypeId::kString: {
        int r = str(a).compare(other.str(b));
        return r < 0 ? -1 : (r > 0 ? 1 : 0);
      }
    }
    return 0;
  }

  // Nulls compare equal to each other.
  bool equal(size_t a, const ColumnView& other, size_t b) const {
    bool va = valid(a), vb = other.valid(b);
    if (!va || !vb) return va == vb;
    return compare(a, other, b) == 0;
  }

 private:
  template <class T>
  static int cmp(T x, T y) {
    return x < y ? -1 : (y < x ? 1 : 0);
  }
  std::string_view str(size_t i) const {
    return std::string_view(bytes_ + offsets_[i], static_cast<size_t>(offsets_[i + 1] - offsets_[i]));
  }

  TypeId id_;
  const uint8_t* bits_ = nullptr;
  const int64_t* i64_ = nullptr;
  const double* f64_ = nullptr;
  const int32_t* i32_ = nullptr;
  const uint8_t* u8_ = nullptr;
  const int64_t* offsets_ = nullptr;
  const char* bytes_ = nullptr;
};

struct OrderedKey {
  ColumnView view;
  bool ascending = true;
  bool nulls_first = false;
};

// Compares row a of `left` with row b of `right` under per-key direction and
// null placement.
inline int compare_rows(std::span<const OrderedKey> left, size_t a, std::span<const OrderedKey> right, size_t b) {
  for (size_t k = 0; k < left.size(); ++k) {
    const auto& l = left[k];
    bool va = l.view.valid(a), vb = right[k].view.valid(b);
    if (!va || !vb) {
      if (va == vb) continue;
      // a null sorts first iff nulls_first
      bool a_first = !va ? l.nulls_first : !l.nulls_first;
      return a_first ? -1 : 1;
    }
    int c = l.view.compare(a, right[k].view, b);
    if (c != 0) return l.ascending ? c : -c;
  }
  return 0;
}

}  // namespace siriette::kernels
