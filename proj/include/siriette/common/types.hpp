#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace siriette {

enum class TypeId : uint8_t {
  kInt64 = 1,
  kFloat64 = 2,
  kDecimal = 3,
  kDate32 = 4,
  kBool = 5,
  kString = 6,
};

inline constexpr int kMaxDecimalPrecision = 18;

// DECIMAL values are stored as int64 scaled by 10^scale. DATE32 is days since
// 1970-01-01. BOOL occupies one byte per row.
struct DataType {
  TypeId id = TypeId::kInt64;
  uint8_t precision = 0;
  uint8_t scale = 0;

  static DataType int64() { return {TypeId::kInt64, 0, 0}; }
  static DataType float64() { return {TypeId::kFloat64, 0, 0}; }
  static DataType decimal(int precision, int scale);
  static DataType date32() { return {TypeId::kDate32, 0, 0}; }
  static DataType boolean() { return {TypeId::kBool, 0, 0}; }
  static DataType string() { return {TypeId::kString, 0, 0}; }

  bool is_numeric() const {
    return id == TypeId::kInt64 || id == TypeId::kFloat64 || id == TypeId::kDecimal;
  }
  bool is_fixed_width() const { return id != TypeId::kString; }
  // Bytes per value for fixed-width types; 0 for STRING.
  size_t byte_width() const;

  std::string to_string() const;
  static DataType parse(std::string_view text);

  friend bool operator==(const DataType&, const DataType&) = default;
};

// True when two types may be compared with each other.
bool comparable(const DataType& a, const DataType& b);

struct Field {
  std::string name;
  DataType type;
  bool nullable = true;

  friend bool operator==(const Field&, const Field&) = default;
};

using Schema = std::vector<Field>;

bool same_types(const Schema& a, const Schema& b);

// A single nullable value. INT64, DECIMAL and DATE32 live in the int64_t slot.
using Datum = std::variant<std::monostate, int64_t, double, bool, std::string>;

inline bool is_null(const Datum& d) { return std::holds_alternative<std::monostate>(d); }

int64_t pow10_i64(int exponent);

namespace date {
// Days since epoch for a YYYY-MM-DD string; nullopt when malformed.
std::optional<int32_t> parse(std::string_view text);
std::string format(int32_t days);
}  // namespace date

namespace decimal {
// Parses "[-]digits[.digits]" into a value scaled by 10^scale. Extra fractional
// digits beyond scale are rejected.
std::optional<int64_t> parse(std::string_view text, int scale);
std::string format(int64_t scaled, int scale);
}  // namespace decimal

// Text rendering used by CSV output and the plan printer.
std::string format_datum(const Datum& d, const DataType& type);
// Inverse of format_datum; empty text is not treated as null here.
std::optional<Datum> parse_datum(std::string_view text, const DataType& type);

std::string format_double(double v);

}  // namespace siriette
