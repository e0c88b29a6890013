#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "siriette/columnar/column.hpp"

namespace siriette {

class Batch {
 public:
  Batch() = default;
  explicit Batch(std::vector<Column> columns);
  // Zero-column batches still carry a row count.
  Batch(std::vector<Column> columns, size_t rows);

  static Batch empty(std::span<const DataType> types);

  size_t num_rows() const { return rows_; }
  size_t num_columns() const { return columns_.size(); }
  const Column& column(size_t i) const { return columns_[i]; }
  const std::vector<Column>& columns() const { return columns_; }
  std::vector<DataType> types() const;

  size_t byte_size() const;
  bool equals(const Batch& other) const;

 private:
  std::vector<Column> columns_;
  size_t rows_ = 0;
};

std::vector<DataType> types_of(const Schema& schema);

// A named, sealed collection of batches with a uniform schema.
class Table {
 public:
  Table() = default;
  Table(std::string name, Schema schema, std::vector<Batch> batches = {});

  const std::string& name() const { return name_; }
  const Schema& schema() const { return schema_; }
  const std::vector<Batch>& batches() const { return batches_; }
  size_t num_rows() const;
  size_t byte_size() const;

  // Single batch holding every row (zero-copy when there is exactly one batch).
  Batch combined() const;

 private:
  std::string name_;
  Schema schema_;
  std::vector<Batch> batches_;
};

enum class IndexWidth : uint8_t { kWide, kNarrow };

// Row indices into a source batch. Wide indices are the engine's uint64 space,
// narrow ones the kernel-side int32 space. The null sentinel marks a padded row
// (left-join misses) and gathers as null.
class SelectionVector {
 public:
  static constexpr uint64_t kNullWide = std::numeric_limits<uint64_t>::max();
  static constexpr int32_t kNullNarrow = -1;
  static constexpr uint64_t kDefaultNarrowLimit = static_cast<uint64_t>(std::numeric_limits<int32_t>::max());

  SelectionVector() = default;
  static SelectionVector wide(std::vector<uint64_t> indices);
  static SelectionVector narrow(std::vector<int32_t> indices);
  static SelectionVector identity(size_t n);

  IndexWidth width() const { return width_; }
  size_t size() const { return width_ == IndexWidth::kWide ? wide_.size() : narrow_.size(); }
  bool empty() const { return size() == 0; }
  bool is_null(size_t i) const {
    return width_ == IndexWidth::kWide ? wide_[i] == kNullWide : narrow_[i] == kNullNarrow;
  }
  uint64_t at(size_t i) const {
    return width_ == IndexWidth::kWide ? wide_[i] : static_cast<uint64_t>(narrow_[i]);
  }
  const std::vector<uint64_t>& wide_indices() const { return wide_; }
  const std::vector<int32_t>& narrow_indices() const { return narrow_; }

  std::vector<uint64_t> to_wide() const;

 private:
  IndexWidth width_ = IndexWidth::kWide;
  std::vector<uint64_t> wide_;
  std::vector<int32_t> narrow_;
};

// out[i] = c[s[i]] including validity; sentinel entries gather as null.
Column gather(const Column& c, const SelectionVector& s);
Batch gather(const Batch& b, const SelectionVector& s);

// Value-preserving wide -> narrow conversion; throws IndexOverflow when any
// index exceeds `limit`.
SelectionVector narrow_indices(const SelectionVector& s,
                               uint64_t limit = SelectionVector::kDefaultNarrowLimit);

Batch concat_batches(std::span<const Batch> batches);
Column concat_columns(std::span<const Column> columns);

// Splits a batch into slices of at most `max_rows` rows (zero-copy when it fits).
std::vector<Batch> rechunk(const Batch& b, size_t max_rows);
Batch slice(const Batch& b, size_t offset, size_t length);

}  // namespace siriette
