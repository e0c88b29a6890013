#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "siriette/columnar/batch.hpp"

namespace siriette::exchange {

inline constexpr std::array<uint8_t, 4> kFrameMagic{'S', 'R', 'X', 'F'};
inline constexpr uint16_t kFrameVersion = 1;
inline constexpr size_t kFrameHeaderSize = 36;
inline constexpr uint16_t kFlagEndOfStream = 1;

// Little-endian, no padding:
//   magic[4] version:u16 query:u64 exchange:u32 producer:u16 partition:u16
//   sequence:u32 flags:u16 payload_length:u64
struct FrameHeader {
  uint16_t version = kFrameVersion;
  uint64_t query_id = 0;
  uint32_t exchange_id = 0;
  uint16_t producer = 0;
  uint16_t partition = 0;  // receiving node
  uint32_t sequence = 0;
  uint16_t flags = 0;
  uint64_t payload_length = 0;

  bool end_of_stream() const { return (flags & kFlagEndOfStream) != 0; }
  friend bool operator==(const FrameHeader&, const FrameHeader&) = default;
};

struct Frame {
  FrameHeader header;
  std::vector<uint8_t> payload;  // serialized Batch; empty for end-of-stream
};

Frame data_frame(uint64_t query, uint32_t exchange, uint16_t producer, uint16_t partition, uint32_t sequence,
                 const Batch& b);
Frame end_frame(uint64_t query, uint32_t exchange, uint16_t producer, uint16_t partition, uint32_t sequence);

std::vector<uint8_t> encode_frame(const Frame& f);
void encode_header(const FrameHeader& h, std::span<uint8_t, kFrameHeaderSize> out);
// TransportError on a bad magic, unknown version, or length mismatch.
FrameHeader decode_header(std::span<const uint8_t> bytes);
Frame decode_frame(std::span<const uint8_t> bytes);

bool is_frame(std::span<const uint8_t> message);

}  // namespace siriette::exchange
