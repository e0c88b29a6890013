#include "siriette/columnar/serialize.hpp"

#include "siriette/common/bytes.hpp"

namespace siriette {

namespace {

template <class T>
void put_values(ByteWriter& w, const Column& c) {
  auto v = c.values<T>();
  if (!v.empty()) w.put_bytes(v.data(), v.size() * sizeof(T));
}

template <class T>
std::vector<T> get_values(ByteReader& r, size_t n) {
  std::vector<T> out(n);
  auto raw = r.take(n * sizeof(T));
  if (n > 0) std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

size_t column_size(const Column& c) {
  size_t n = 1 + 8 + 1;
  if (c.type().id == TypeId::kDecimal) n += 2;
  if (c.has_validity()) n += bitmap::bytes_for(c.size());
  if (c.type().id == TypeId::kString) {
    n += (c.size() + 1) * 8 + static_cast<size_t>(c.strings().offsets[c.size()]);
  } else {
    n += c.size() * c.type().byte_width();
  }
  return n;
}

}  // namespace

size_t serialized_size(const Batch& b) {
  size_t n = 4;
  for (const auto& c : b.columns()) n += column_size(c);
  return n;
}

void serialize_batch_into(const Batch& b, std::vector<uint8_t>& out) {
  out.reserve(out.size() + serialized_size(b));
  ByteWriter w(out);
  w.put<uint32_t>(static_cast<uint32_t>(b.num_columns()));
  for (const auto& c : b.columns()) {
    w.put<uint8_t>(static_cast<uint8_t>(c.type().id));
    if (c.type().id == TypeId::kDecimal) {
      w.put<uint8_t>(c.type().precision);
      w.put<uint8_t>(c.type().scale);
    }
    w.put<uint64_t>(c.size());
    w.put<uint8_t>(c.has_validity() ? 1 : 0);
    if (c.has_validity()) {
      size_t nbytes = bitmap::bytes_for(c.size());
      std::vector<uint8_t> bits(c.validity()->begin(), c.validity()->begin() + static_cast<ptrdiff_t>(nbytes));
      // Bits past the row count are always written as zero.
      if (c.size() % 8 != 0) bits.back() = static_cast<uint8_t>(bits.back() & ((1u << (c.size() % 8)) - 1));
      w.put_bytes(bits.data(), bits.size());
    }
    switch (c.type().id) {
      case TypeId::kInt64:
      case TypeId::kDecimal:
        put_values<int64_t>(w, c);
        break;
      case TypeId::kFloat64:
        put_values<double>(w, c);
        break;
      case TypeId::kDate32:
        put_values<int32_t>(w, c);
        break;
      case TypeId::kBool:
        put_values<uint8_t>(w, c);
        break;
      case TypeId::kString: {
        const auto& s = c.strings();
        for (size_t i = 0; i <= c.size(); ++i) w.put<uint64_t>(static_cast<uint64_t>(s.offsets[i]));
        w.put_bytes(s.bytes.data(), static_cast<size_t>(s.offsets[c.size()]));
        break;
      }
    }
  }
}

std::vector<uint8_t> serialize_batch(const Batch& b) {
  std::vector<uint8_t> out;
  serialize_batch_into(b, out);
  return out;
}

Batch deserialize_batch(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  uint32_t ncols = r.get<uint32_t>();
  std::vector<Column> cols;
  cols.reserve(ncols);
  size_t rows = 0;
  for (uint32_t ci = 0; ci < ncols; ++ci) {
    uint8_t tag = r.get<uint8_t>();
    if (tag < 1 || tag > 6) raise(ErrorCode::kTransportError, "bad dtype tag " + std::to_string(tag));
    DataType type{static_cast<TypeId>(tag), 0, 0};
    if (type.id == TypeId::kDecimal) {
      int precision = r.get<uint8_t>();
      int scale = r.get<uint8_t>();
      type = DataType::decimal(precision, scale);
    }
    uint64_t n = r.get<uint64_t>();
    if (n > r.remaining()) raise(ErrorCode::kTransportError, "row count exceeds payload");
    uint8_t has_validity = r.get<uint8_t>();
    Bitmap validity;
    if (has_validity) {
      auto raw = r.take(bitmap::bytes_for(n));
      validity.assign(raw.begin(), raw.end());
    }
    std::shared_ptr<const Bitmap> bits;
    if (has_validity) bits = std::make_shared<const Bitmap>(std::move(validity));
    std::shared_ptr<const ColumnPayload> payload;
    switch (type.id) {
      case TypeId::kInt64:
      case TypeId::kDecimal:
        payload = std::make_shared<const ColumnPayload>(get_values<int64_t>(r, n));
        break;
      case TypeId::kFloat64:
        payload = std::make_shared<const ColumnPayload>(get_values<double>(r, n));
        break;
      case TypeId::kDate32:
        payload = std::make_shared<const ColumnPayload>(get_values<int32_t>(r, n));
        break;
      case TypeId::kBool:
        payload = std::make_shared<const ColumnPayload>(get_values<uint8_t>(r, n));
        break;
      case TypeId::kString: {
        StringData s;
        s.offsets.resize(n + 1);
        for (size_t i = 0; i <= n; ++i) s.offsets[i] = static_cast<int64_t>(r.get<uint64_t>());
        if (s.offsets[0] != 0) raise(ErrorCode::kTransportError, "string offsets must start at 0");
        for (size_t i = 0; i < n; ++i) {
          if (s.offsets[i + 1] < s.offsets[i]) raise(ErrorCode::kTransportError, "string offsets decrease");
        }
        auto raw = r.take(static_cast<size_t>(s.offsets[n]));
        s.bytes.assign(raw.begin(), raw.end());
        payload = std::make_shared<const ColumnPayload>(std::move(s));
        break;
      }
    }
    cols.emplace_back(type, n, std::move(payload), std::move(bits));
    rows = n;
  }
  if (r.remaining() != 0) raise(ErrorCode::kTransportError, "trailing bytes after batch");
  return Batch(std::move(cols), rows);
}

}  // namespace siriette
