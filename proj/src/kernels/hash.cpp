#include "siriette/kernels/hash.hpp"

namespace siriette::kernels {

uint64_t hash_value(const Column& c, size_t row) {
  if (!c.is_valid(row)) return 0;
  switch (c.type().id) {
    case TypeId::kInt64:
    case TypeId::kDecimal: {
      int64_t v = c.values<int64_t>()[row];
      return fnv1a(&v, sizeof(v));
    }
    case TypeId::kFloat64: {
      double v = c.values<double>()[row];
      if (v == 0.0) v = 0.0;
      return fnv1a(&v, sizeof(v));
    }
    case TypeId::kDate32: {
      int32_t v = c.values<int32_t>()[row];
      return fnv1a(&v, sizeof(v));
    }
    case TypeId::kBool: {
      uint8_t v = c.values<uint8_t>()[row] ? 1 : 0;
      return fnv1a(&v, sizeof(v));
    }
    case TypeId::kString: {
      auto s = c.string_at(row);
      return fnv1a(s.data(), s.size());
    }
  }
  return 0;
}

namespace {

template <class T>
void mix_fixed(const Column& c, std::vector<uint64_t>& out) {
  auto values = c.values<T>();
  for (size_t r = 0; r < out.size(); ++r) {
    uint64_t h = 0;
    if (c.is_valid(r)) {
      T v = values[r];
      if constexpr (std::is_same_v<T, double>) {
        if (v == 0.0) v = 0.0;
      }
      if constexpr (std::is_same_v<T, uint8_t>) v = v ? 1 : 0;
      h = fnv1a(&v, sizeof(v));
    }
    out[r] = out[r] * 31 + h;
  }
}

}  // namespace

std::vector<uint64_t> hash_rows(std::span<const Column> keys) {
  size_t n = keys.empty() ? 0 : keys[0].size();
  std::vector<uint64_t> out(n, 0);
  for (const auto& c : keys) {
    switch (c.type().id) {
      case TypeId::kInt64:
      case TypeId::kDecimal:
        mix_fixed<int64_t>(c, out);
        break;
      case TypeId::kFloat64:
        mix_fixed<double>(c, out);
        break;
      case TypeId::kDate32:
        mix_fixed<int32_t>(c, out);
        break;
      case TypeId::kBool:
        mix_fixed<uint8_t>(c, out);
        break;
      case TypeId::kString:
        for (size_t r = 0; r < n; ++r) {
          uint64_t h = 0;
          if (c.is_valid(r)) {
            auto s = c.string_at(r);
            h = fnv1a(s.data(), s.size());
          }
          out[r] = out[r] * 31 + h;
        }
        break;
    }
  }
  return out;
}

}  // namespace siriette::kernels
