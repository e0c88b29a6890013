#include "siriette/exchange/frame.hpp"

#include <algorithm>
#include <cstring>

#include "siriette/columnar/serialize.hpp"
#include "siriette/common/bytes.hpp"

namespace siriette::exchange {

Frame data_frame(uint64_t query, uint32_t exchange, uint16_t producer, uint16_t partition, uint32_t sequence,
                 const Batch& b) {
  Frame f;
  f.header.query_id = query;
  f.header.exchange_id = exchange;
  f.header.producer = producer;
  f.header.partition = partition;
  f.header.sequence = sequence;
  f.payload = serialize_batch(b);
  f.header.payload_length = f.payload.size();
  return f;
}

Frame end_frame(uint64_t query, uint32_t exchange, uint16_t producer, uint16_t partition, uint32_t sequence) {
  Frame f;
  f.header.query_id = query;
  f.header.exchange_id = exchange;
  f.header.producer = producer;
  f.header.partition = partition;
  f.header.sequence = sequence;
  f.header.flags = kFlagEndOfStream;
  return f;
}

void encode_header(const FrameHeader& h, std::span<uint8_t, kFrameHeaderSize> out) {
  std::vector<uint8_t> buf;
  buf.reserve(kFrameHeaderSize);
  ByteWriter w(buf);
  w.put_bytes(kFrameMagic.data(), kFrameMagic.size());
  w.put(h.version);
  w.put(h.query_id);
  w.put(h.exchange_id);
  w.put(h.producer);
  w.put(h.partition);
  w.put(h.sequence);
  w.put(h.flags);
  w.put(h.payload_length);
  std::copy(buf.begin(), buf.end(), out.begin());
}

std::vector<uint8_t> encode_frame(const Frame& f) {
  if (f.header.payload_length != f.payload.size()) {
    raise(ErrorCode::kInternal, "frame payload length does not match its header");
  }
  if (f.header.end_of_stream() && !f.payload.empty()) {
    raise(ErrorCode::kInternal, "end-of-stream frame with a payload");
  }
  std::vector<uint8_t> out(kFrameHeaderSize + f.payload.size());
  encode_header(f.header, std::span<uint8_t, kFrameHeaderSize>(out.data(), kFrameHeaderSize));
  std::memcpy(out.data() + kFrameHeaderSize, f.payload.data(), f.payload.size());
  return out;
}

bool is_frame(std::span<const uint8_t> message) {
  return message.size() >= kFrameMagic.size() && std::equal(kFrameMagic.begin(), kFrameMagic.end(), message.begin());
}

FrameHeader decode_header(std::span<const uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderSize || !is_frame(bytes)) {
    raise(ErrorCode::kTransportError, "not an exchange frame");
  }
  ByteReader r(bytes.subspan(kFrameMagic.size()));
  FrameHeader h;
  h.version = r.get<uint16_t>();
  if (h.version != kFrameVersion) {
    raise(ErrorCode::kTransportError, "unsupported frame version " + std::to_string(h.version));
  }
  h.query_id = r.get<uint64_t>();
  h.exchange_id = r.get<uint32_t>();
  h.producer = r.get<uint16_t>();
  h.partition = r.get<uint16_t>();
  h.sequence = r.get<uint32_t>();
  h.flags = r.get<uint16_t>();
  h.payload_length = r.get<uint64_t>();
  return h;
}

Frame decode_frame(std::span<const uint8_t> bytes) {
  Frame f;
  f.header = decode_header(bytes);
  if (bytes.size() - kFrameHeaderSize != f.header.payload_length) {
    raise(ErrorCode::kTransportError, "frame length mismatch: header says " +
                                          std::to_string(f.header.payload_length) + " payload bytes, got " +
                                          std::to_string(bytes.size() - kFrameHeaderSize));
  }
  if (f.header.end_of_stream() && f.header.payload_length != 0) {
    raise(ErrorCode::kTransportError, "end-of-stream frame with a payload");
  }
  f.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  return f;
}

}  // namespace siriette::exchange
