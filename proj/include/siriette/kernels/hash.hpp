#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "siriette/columnar/column.hpp"

namespace siriette::kernels {

inline constexpr uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr uint64_t kFnvPrime = 1099511628211ULL;

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = kFnvOffset) {
  auto p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

// 64-bit FNV-1a over the canonical little-endian encoding of one value
// (INT64/DECIMAL 8 bytes, FLOAT64 8 bytes with -0 folded to +0, DATE32 4
// bytes, BOOL 1 byte, STRING raw bytes). Nulls hash to 0.
uint64_t hash_value(const Column& c, size_t row);

// Per-row key hash: h = h * 31 + column_hash, starting from 0.
std::vector<uint64_t> hash_rows(std::span<const Column> keys);

}  // namespace siriette::kernels
