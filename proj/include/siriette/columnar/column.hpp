#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "siriette/common/error.hpp"
#include "siriette/common/types.hpp"

namespace siriette {

namespace bitmap {
inline size_t bytes_for(size_t bits) { return (bits + 7) / 8; }
inline bool get(const uint8_t* bits, size_t i) { return (bits[i >> 3] >> (i & 7)) & 1; }
inline void set(uint8_t* bits, size_t i, bool v) {
  if (v) {
    bits[i >> 3] = static_cast<uint8_t>(bits[i >> 3] | (1u << (i & 7)));
  } else {
    bits[i >> 3] = static_cast<uint8_t>(bits[i >> 3] & ~(1u << (i & 7)));
  }
}
}  // namespace bitmap

struct StringData {
  std::vector<int64_t> offsets{0};  // length + 1 entries
  std::string bytes;

  friend bool operator==(const StringData&, const StringData&) = default;
};

// INT64 and DECIMAL use int64_t, FLOAT64 double, DATE32 int32_t, BOOL uint8_t.
using ColumnPayload =
    std::variant<std::vector<int64_t>, std::vector<double>, std::vector<int32_t>, std::vector<uint8_t>, StringData>;

using Bitmap = std::vector<uint8_t>;

// Immutable columnar vector. Copies share the underlying buffers.
class Column {
 public:
  Column() = default;
  Column(DataType type, size_t length, std::shared_ptr<const ColumnPayload> payload,
         std::shared_ptr<const Bitmap> validity);

  template <class T>
  static Column make(DataType type, std::vector<T> values, Bitmap validity = {}) {
    size_t n = values.size();
    auto payload = std::make_shared<const ColumnPayload>(std::move(values));
    std::shared_ptr<const Bitmap> bits;
    if (!validity.empty()) bits = std::make_shared<const Bitmap>(std::move(validity));
    return Column(type, n, std::move(payload), std::move(bits));
  }
  static Column make_strings(StringData data, Bitmap validity = {});
  static Column from_datums(DataType type, std::span<const Datum> values);
  static Column nulls(DataType type, size_t length);
  static Column empty(DataType type) { return nulls(type, 0); }

  const DataType& type() const { return type_; }
  size_t size() const { return length_; }

  bool has_validity() const { return validity_ != nullptr; }
  const Bitmap* validity() const { return validity_.get(); }
  bool is_valid(size_t i) const { return !validity_ || bitmap::get(validity_->data(), i); }
  size_t null_count() const;

  template <class T>
  std::span<const T> values() const {
    const auto& v = std::get<std::vector<T>>(*payload_);
    return {v.data(), length_};
  }
  const StringData& strings() const { return std::get<StringData>(*payload_); }
  std::string_view string_at(size_t i) const {
    const auto& s = strings();
    return std::string_view(s.bytes).substr(static_cast<size_t>(s.offsets[i]),
                                            static_cast<size_t>(s.offsets[i + 1] - s.offsets[i]));
  }
  const ColumnPayload& payload() const { return *payload_; }
  const std::shared_ptr<const ColumnPayload>& payload_ptr() const { return payload_; }
  const std::shared_ptr<const Bitmap>& validity_ptr() const { return validity_; }

  Datum datum(size_t i) const;

  // Logical byte size: validity bytes plus value payload.
  size_t byte_size() const;

  // Exact equality: type, length, per-row validity and every payload slot.
  bool equals(const Column& other) const;

 private:
  DataType type_{};
  size_t length_ = 0;
  std::shared_ptr<const ColumnPayload> payload_;
  std::shared_ptr<const Bitmap> validity_;
};

// Row-at-a-time builder; used for ingestion and small results.
class ColumnBuilder {
 public:
  explicit ColumnBuilder(DataType type);

  void append_null();
  void append(const Datum& value);
  void append_int(int64_t v);
  void append_double(double v);
  void append_bool(bool v);
  void append_string(std::string_view v);
  void reserve(size_t n);
  size_t size() const { return length_; }
  const DataType& type() const { return type_; }

  Column finish();

 private:
  void mark(bool valid);

  DataType type_;
  size_t length_ = 0;
  bool any_null_ = false;
  Bitmap validity_;
  ColumnPayload payload_;
};

ColumnPayload make_payload(const DataType& type);

}  // namespace siriette
