#include "siriette/columnar/column.hpp"

#include <cstring>

namespace siriette {

namespace {

bool payload_matches(const DataType& type, const ColumnPayload& payload) {
  switch (type.id) {
    case TypeId::kInt64:
    case TypeId::kDecimal:
      return std::holds_alternative<std::vector<int64_t>>(payload);
    case TypeId::kFloat64:
      return std::holds_alternative<std::vector<double>>(payload);
    case TypeId::kDate32:
      return std::holds_alternative<std::vector<int32_t>>(payload);
    case TypeId::kBool:
      return std::holds_alternative<std::vector<uint8_t>>(payload);
    case TypeId::kString:
      return std::holds_alternative<StringData>(payload);
  }
  return false;
}

size_t payload_length(const ColumnPayload& payload) {
  return std::visit(
      [](const auto& v) -> size_t {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, StringData>) {
          return v.offsets.empty() ? 0 : v.offsets.size() - 1;
        } else {
          return v.size();
        }
      },
      payload);
}

}  // namespace

ColumnPayload make_payload(const DataType& type) {
  switch (type.id) {
    case TypeId::kInt64:
    case TypeId::kDecimal:
      return std::vector<int64_t>{};
    case TypeId::kFloat64:
      return std::vector<double>{};
    case TypeId::kDate32:
      return std::vector<int32_t>{};
    case TypeId::kBool:
      return std::vector<uint8_t>{};
    case TypeId::kString:
      return StringData{};
  }
  return std::vector<int64_t>{};
}

Column::Column(DataType type, size_t length, std::shared_ptr<const ColumnPayload> payload,
               std::shared_ptr<const Bitmap> validity)
    : type_(type), length_(length), payload_(std::move(payload)), validity_(std::move(validity)) {
  if (!payload_ || !payload_matches(type_, *payload_)) {
    raise(ErrorCode::kInternal, "column payload does not match " + type_.to_string());
  }
  if (payload_length(*payload_) < length_) {
    raise(ErrorCode::kInternal, "column payload shorter than length");
  }
  if (type_.id == TypeId::kString) {
    const auto& s = std::get<StringData>(*payload_);
    if (s.offsets.empty() || s.offsets[0] != 0) raise(ErrorCode::kInternal, "string offsets must start at 0");
  }
  if (validity_ && validity_->size() < bitmap::bytes_for(length_)) {
    raise(ErrorCode::kInternal, "validity bitmap too short");
  }
}

Column Column::make_strings(StringData data, Bitmap validity) {
  size_t n = data.offsets.empty() ? 0 : data.offsets.size() - 1;
  auto payload = std::make_shared<const ColumnPayload>(std::move(data));
  std::shared_ptr<const Bitmap> bits;
  if (!validity.empty()) bits = std::make_shared<const Bitmap>(std::move(validity));
  return Column(DataType::string(), n, std::move(payload), std::move(bits));
}

Column Column::from_datums(DataType type, std::span<const Datum> values) {
  ColumnBuilder builder(type);
  builder.reserve(values.size());
  for (const auto& v : values) builder.append(v);
  return builder.finish();
}

Column Column::nulls(DataType type, size_t length) {
  ColumnBuilder builder(type);
  builder.reserve(length);
  for (size_t i = 0; i < length; ++i) builder.append_null();
  return builder.finish();
}

size_t Column::null_count() const {
  if (!validity_) return 0;
  size_t n = 0;
  for (size_t i = 0; i < length_; ++i) n += is_valid(i) ? 0 : 1;
  return n;
}

Datum Column::datum(size_t i) const {
  if (!is_valid(i)) return std::monostate{};
  switch (type_.id) {
    case TypeId::kInt64:
    case TypeId::kDecimal:
      return values<int64_t>()[i];
    case TypeId::kFloat64:
      return values<double>()[i];
    case TypeId::kDate32:
      return static_cast<int64_t>(values<int32_t>()[i]);
    case TypeId::kBool:
      return values<uint8_t>()[i] != 0;
    case TypeId::kString:
      return std::string(string_at(i));
  }
  return std::monostate{};
}

size_t Column::byte_size() const {
  size_t bytes = validity_ ? bitmap::bytes_for(length_) : 0;
  if (type_.id == TypeId::kString) {
    const auto& s = strings();
    bytes += (length_ + 1) * sizeof(int64_t) + static_cast<size_t>(s.offsets[length_]);
  } else {
    bytes += length_ * type_.byte_width();
  }
  return bytes;
}

bool Column::equals(const Column& other) const {
  if (!(type_ == other.type_) || length_ != other.length_) return false;
  for (size_t i = 0; i < length_; ++i) {
    if (is_valid(i) != other.is_valid(i)) return false;
  }
  switch (type_.id) {
    case TypeId::kInt64:
    case TypeId::kDecimal: {
      auto a = values<int64_t>(), b = other.values<int64_t>();
      return std::equal(a.begin(), a.end(), b.begin());
    }
    case TypeId::kFloat64: {
      auto a = values<double>(), b = other.values<double>();
      return length_ == 0 || std::memcmp(a.data(), b.data(), length_ * sizeof(double)) == 0;
    }
    case TypeId::kDate32: {
      auto a = values<int32_t>(), b = other.values<int32_t>();
      return std::equal(a.begin(), a.end(), b.begin());
    }
    case TypeId::kBool: {
      auto a = values<uint8_t>(), b = other.values<uint8_t>();
      return std::equal(a.begin(), a.end(), b.begin());
    }
    case TypeId::kString: {
      for (size_t i = 0; i <= length_; ++i) {
        if (strings().offsets[i] != other.strings().offsets[i]) return false;
      }
      for (size_t i = 0; i < length_; ++i) {
        if (string_at(i) != other.string_at(i)) return false;
      }
      return true;
    }
  }
  return false;
}

ColumnBuilder::ColumnBuilder(DataType type) : type_(type), payload_(make_payload(type)) {}

void ColumnBuilder::reserve(size_t n) {
  std::visit(
      [n](auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, StringData>) {
          v.offsets.reserve(n + 1);
        } else {
          v.reserve(n);
        }
      },
      payload_);
  validity_.reserve(bitmap::bytes_for(n));
}

void ColumnBuilder::mark(bool valid) {
  if (length_ % 8 == 0) validity_.push_back(0);
  if (valid) {
    bitmap::set(validity_.data(), length_, true);
  } else {
    any_null_ = true;
  }
  ++length_;
}

void ColumnBuilder::append_null() {
  std::visit(
      [](auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, StringData>) {
          v.offsets.push_back(static_cast<int64_t>(v.bytes.size()));
        } else {
          v.push_back({});
        }
      },
      payload_);
  mark(false);
}

void ColumnBuilder::append_int(int64_t v) {
  if (type_.id == TypeId::kDate32) {
    std::get<std::vector<int32_t>>(payload_).push_back(static_cast<int32_t>(v));
  } else {
    std::get<std::vector<int64_t>>(payload_).push_back(v);
  }
  mark(true);
}

void ColumnBuilder::append_double(double v) {
  std::get<std::vector<double>>(payload_).push_back(v);
  mark(true);
}

void ColumnBuilder::append_bool(bool v) {
  std::get<std::vector<uint8_t>>(payload_).push_back(v ? 1 : 0);
  mark(true);
}

void ColumnBuilder::append_string(std::string_view v) {
  auto& s = std::get<StringData>(payload_);
  s.bytes.append(v);
  s.offsets.push_back(static_cast<int64_t>(s.bytes.size()));
  mark(true);
}

void ColumnBuilder::append(const Datum& value) {
  if (is_null(value)) {
    append_null();
    return;
  }
  switch (type_.id) {
    case TypeId::kInt64:
    case TypeId::kDecimal:
    case TypeId::kDate32:
      append_int(std::get<int64_t>(value));
      return;
    case TypeId::kFloat64:
      append_double(std::get<double>(value));
      return;
    case TypeId::kBool:
      append_bool(std::get<bool>(value));
      return;
    case TypeId::kString:
      append_string(std::get<std::string>(value));
      return;
  }
}

Column ColumnBuilder::finish() {
  Bitmap bits;
  if (any_null_) bits = std::move(validity_);
  auto payload = std::make_shared<const ColumnPayload>(std::move(payload_));
  std::shared_ptr<const Bitmap> validity;
  if (!bits.empty()) validity = std::make_shared<const Bitmap>(std::move(bits));
  Column out(type_, length_, std::move(payload), std::move(validity));
  payload_ = make_payload(type_);
  validity_.clear();
  length_ = 0;
  any_null_ = false;
  return out;
}

}  // namespace siriette
