#include "siriette/columnar/batch.hpp"

#include <algorithm>
#include <numeric>

namespace siriette {

Batch::Batch(std::vector<Column> columns) : columns_(std::move(columns)) {
  rows_ = columns_.empty() ? 0 : columns_[0].size();
  for (const auto& c : columns_) {
    if (c.size() != rows_) raise(ErrorCode::kSchemaMismatch, "batch columns differ in length");
  }
}

Batch::Batch(std::vector<Column> columns, size_t rows) : columns_(std::move(columns)), rows_(rows) {
  for (const auto& c : columns_) {
    if (c.size() != rows_) raise(ErrorCode::kSchemaMismatch, "batch columns differ in length");
  }
}

Batch Batch::empty(std::span<const DataType> types) {
  std::vector<Column> cols;
  cols.reserve(types.size());
  for (const auto& t : types) cols.push_back(Column::empty(t));
  return Batch(std::move(cols), 0);
}

std::vector<DataType> Batch::types() const {
  std::vector<DataType> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.type());
  return out;
}

size_t Batch::byte_size() const {
  size_t n = 0;
  for (const auto& c : columns_) n += c.byte_size();
  return n;
}

bool Batch::equals(const Batch& other) const {
  if (rows_ != other.rows_ || columns_.size() != other.columns_.size()) return false;
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (!columns_[i].equals(other.columns_[i])) return false;
  }
  return true;
}

std::vector<DataType> types_of(const Schema& schema) {
  std::vector<DataType> out;
  out.reserve(schema.size());
  for (const auto& f : schema) out.push_back(f.type);
  return out;
}

Table::Table(std::string name, Schema schema, std::vector<Batch> batches)
    : name_(std::move(name)), schema_(std::move(schema)), batches_(std::move(batches)) {
  auto expected = types_of(schema_);
  for (const auto& b : batches_) {
    if (b.types() != expected) raise(ErrorCode::kSchemaMismatch, "table '" + name_ + "' batch schema differs");
  }
}

size_t Table::num_rows() const {
  size_t n = 0;
  for (const auto& b : batches_) n += b.num_rows();
  return n;
}

size_t Table::byte_size() const {
  size_t n = 0;
  for (const auto& b : batches_) n += b.byte_size();
  return n;
}

Batch Table::combined() const {
  if (batches_.size() == 1) return batches_[0];
  if (batches_.empty()) {
    auto types = types_of(schema_);
    return Batch::empty(types);
  }
  return concat_batches(batches_);
}

SelectionVector SelectionVector::wide(std::vector<uint64_t> indices) {
  SelectionVector s;
  s.width_ = IndexWidth::kWide;
  s.wide_ = std::move(indices);
  return s;
}

SelectionVector SelectionVector::narrow(std::vector<int32_t> indices) {
  SelectionVector s;
  s.width_ = IndexWidth::kNarrow;
  s.narrow_ = std::move(indices);
  return s;
}

SelectionVector SelectionVector::identity(size_t n) {
  std::vector<uint64_t> idx(n);
  std::iota(idx.begin(), idx.end(), uint64_t{0});
  return wide(std::move(idx));
}

std::vector<uint64_t> SelectionVector::to_wide() const {
  if (width_ == IndexWidth::kWide) return wide_;
  std::vector<uint64_t> out(narrow_.size());
  for (size_t i = 0; i < narrow_.size(); ++i) {
    out[i] = narrow_[i] == kNullNarrow ? kNullWide : static_cast<uint64_t>(narrow_[i]);
  }
  return out;
}

SelectionVector narrow_indices(const SelectionVector& s, uint64_t limit) {
  if (s.width() == IndexWidth::kNarrow) {
    for (int32_t v : s.narrow_indices()) {
      if (v != SelectionVector::kNullNarrow && static_cast<uint64_t>(v) > limit) {
        raise(ErrorCode::kIndexOverflow, "row index " + std::to_string(v) + " exceeds narrow limit " +
                                             std::to_string(limit));
      }
    }
    return s;
  }
  const auto& wide = s.wide_indices();
  std::vector<int32_t> out(wide.size());
  uint64_t hard = std::min<uint64_t>(limit, SelectionVector::kDefaultNarrowLimit);
  for (size_t i = 0; i < wide.size(); ++i) {
    uint64_t v = wide[i];
    if (v == SelectionVector::kNullWide) {
      out[i] = SelectionVector::kNullNarrow;
      continue;
    }
    if (v > hard) {
      raise(ErrorCode::kIndexOverflow,
            "row index " + std::to_string(v) + " exceeds narrow limit " + std::to_string(hard));
    }
    out[i] = static_cast<int32_t>(v);
  }
  return SelectionVector::narrow(std::move(out));
}

namespace {

template <class T>
Column gather_fixed(const Column& c, const SelectionVector& s) {
  auto src = c.values<T>();
  size_t n = s.size();
  std::vector<T> out(n);
  Bitmap validity;
  bool need_bits = c.has_validity();
  for (size_t i = 0; i < n && !need_bits; ++i) need_bits = s.is_null(i);
  if (need_bits) validity.assign(bitmap::bytes_for(n), 0);
  for (size_t i = 0; i < n; ++i) {
    if (s.is_null(i)) continue;
    uint64_t r = s.at(i);
    if (r >= c.size()) {
      raise(ErrorCode::kIndexOutOfRange,
            "index " + std::to_string(r) + " out of range for " + std::to_string(c.size()) + " rows");
    }
    out[i] = src[r];
    if (need_bits && c.is_valid(r)) bitmap::set(validity.data(), i, true);
  }
  return Column::make<T>(c.type(), std::move(out), std::move(validity));
}

Column gather_strings(const Column& c, const SelectionVector& s) {
  size_t n = s.size();
  StringData out;
  out.offsets.reserve(n + 1);
  Bitmap validity;
  bool need_bits = c.has_validity();
  for (size_t i = 0; i < n && !need_bits; ++i) need_bits = s.is_null(i);
  if (need_bits) validity.assign(bitmap::bytes_for(n), 0);
  for (size_t i = 0; i < n; ++i) {
    if (!s.is_null(i)) {
      uint64_t r = s.at(i);
      if (r >= c.size()) {
        raise(ErrorCode::kIndexOutOfRange,
              "index " + std::to_string(r) + " out of range for " + std::to_string(c.size()) + " rows");
      }
      if (c.is_valid(r)) {
        out.bytes.append(c.string_at(r));
        if (need_bits) bitmap::set(validity.data(), i, true);
      }
    }
    out.offsets.push_back(static_cast<int64_t>(out.bytes.size()));
  }
  return Column::make_strings(std::move(out), std::move(validity));
}

}  // namespace

Column gather(const Column& c, const SelectionVector& s) {
  switch (c.type().id) {
    case TypeId::kInt64:
    case TypeId::kDecimal:
      return gather_fixed<int64_t>(c, s);
    case TypeId::kFloat64:
      return gather_fixed<double>(c, s);
    case TypeId::kDate32:
      return gather_fixed<int32_t>(c, s);
    case TypeId::kBool:
      return gather_fixed<uint8_t>(c, s);
    case TypeId::kString:
      return gather_strings(c, s);
  }
  raise(ErrorCode::kInternal, "unreachable");
}

Batch gather(const Batch& b, const SelectionVector& s) {
  std::vector<Column> cols;
  cols.reserve(b.num_columns());
  for (const auto& c : b.columns()) cols.push_back(gather(c, s));
  if (cols.empty()) {
    for (size_t i = 0; i < s.size(); ++i) {
      if (!s.is_null(i) && s.at(i) >= b.num_rows()) raise(ErrorCode::kIndexOutOfRange, "index out of range");
    }
  }
  return Batch(std::move(cols), s.size());
}

namespace {

template <class T>
Column concat_fixed(std::span<const Column> columns, size_t total, bool any_validity) {
  std::vector<T> out;
  out.reserve(total);
  Bitmap validity;
  if (any_validity) validity.assign(bitmap::bytes_for(total), 0);
  size_t pos = 0;
  for (const auto& c : columns) {
    auto v = c.values<T>();
    out.insert(out.end(), v.begin(), v.end());
    if (any_validity) {
      for (size_t i = 0; i < c.size(); ++i) {
        if (c.is_valid(i)) bitmap::set(validity.data(), pos + i, true);
      }
    }
    pos += c.size();
  }
  return Column::make<T>(columns[0].type(), std::move(out), std::move(validity));
}

}  // namespace

Column concat_columns(std::span<const Column> columns) {
  if (columns.empty()) raise(ErrorCode::kInternal, "concat of zero columns");
  if (columns.size() == 1) return columns[0];
  size_t total = 0;
  bool any_validity = false;
  for (const auto& c : columns) {
    if (!(c.type() == columns[0].type())) raise(ErrorCode::kSchemaMismatch, "concat of differing column types");
    total += c.size();
    any_validity = any_validity || c.has_validity();
  }
  switch (columns[0].type().id) {
    case TypeId::kInt64:
    case TypeId::kDecimal:
      return concat_fixed<int64_t>(columns, total, any_validity);
    case TypeId::kFloat64:
      return concat_fixed<double>(columns, total, any_validity);
    case TypeId::kDate32:
      return concat_fixed<int32_t>(columns, total, any_validity);
    case TypeId::kBool:
      return concat_fixed<uint8_t>(columns, total, any_validity);
    case TypeId::kString: {
      StringData out;
      out.offsets.reserve(total + 1);
      Bitmap validity;
      if (any_validity) validity.assign(bitmap::bytes_for(total), 0);
      size_t pos = 0;
      for (const auto& c : columns) {
        const auto& s = c.strings();
        int64_t base = static_cast<int64_t>(out.bytes.size());
        int64_t begin = s.offsets[0];
        out.bytes.append(s.bytes, static_cast<size_t>(begin), static_cast<size_t>(s.offsets[c.size()] - begin));
        for (size_t i = 0; i < c.size(); ++i) {
          out.offsets.push_back(base + s.offsets[i + 1] - begin);
          if (any_validity && c.is_valid(i)) bitmap::set(validity.data(), pos + i, true);
        }
        pos += c.size();
      }
      return Column::make_strings(std::move(out), std::move(validity));
    }
  }
  raise(ErrorCode::kInternal, "unreachable");
}

Batch concat_batches(std::span<const Batch> batches) {
  if (batches.empty()) return Batch{};
  if (batches.size() == 1) return batches[0];
  auto types = batches[0].types();
  size_t rows = 0;
  for (const auto& b : batches) {
    if (b.types() != types) raise(ErrorCode::kSchemaMismatch, "concat of batches with differing schemas");
    rows += b.num_rows();
  }
  std::vector<Column> cols;
  cols.reserve(types.size());
  std::vector<Column> parts;
  for (size_t c = 0; c < types.size(); ++c) {
    parts.clear();
    for (const auto& b : batches) parts.push_back(b.column(c));
    cols.push_back(concat_columns(parts));
  }
  return Batch(std::move(cols), rows);
}

Batch slice(const Batch& b, size_t offset, size_t length) {
  if (offset == 0 && length == b.num_rows()) return b;
  std::vector<uint64_t> idx(length);
  std::iota(idx.begin(), idx.end(), static_cast<uint64_t>(offset));
  return gather(b, SelectionVector::wide(std::move(idx)));
}

std::vector<Batch> rechunk(const Batch& b, size_t max_rows) {
  if (max_rows == 0 || b.num_rows() <= max_rows) return {b};
  std::vector<Batch> out;
  for (size_t off = 0; off < b.num_rows(); off += max_rows) {
    out.push_back(slice(b, off, std::min(max_rows, b.num_rows() - off)));
  }
  return out;
}

}  // namespace siriette
