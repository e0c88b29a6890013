#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "siriette/columnar/batch.hpp"

namespace siriette {

// Batch wire layout, little-endian, no padding:
//
//   u32 column_count
//   per column:
//     u8  dtype tag (TypeId value)
//     [u8 precision, u8 scale]          DECIMAL only
//     u64 row_count
//     u8  validity_present
//     ceil(row_count/8) validity bytes  when validity_present
//     payload:
//       fixed width: row_count values (8/8/8/4/1 bytes)
//       STRING: (row_count+1) u64 offsets, then offsets[row_count] bytes
std::vector<uint8_t> serialize_batch(const Batch& b);
void serialize_batch_into(const Batch& b, std::vector<uint8_t>& out);
Batch deserialize_batch(std::span<const uint8_t> bytes);

size_t serialized_size(const Batch& b);

}  // namespace siriette
