#include "siriette/common/types.hpp"

#include <charconv>
#include <chrono>
#include <cmath>

#include "siriette/common/error.hpp"

namespace siriette {

DataType DataType::decimal(int precision, int scale) {
  if (precision < 1 || precision > kMaxDecimalPrecision || scale < 0 || scale > precision) {
    raise(ErrorCode::kTypeMismatch, "invalid DECIMAL(" + std::to_string(precision) + "," +
                                        std::to_string(scale) + ")");
  }
  return {TypeId::kDecimal, static_cast<uint8_t>(precision), static_cast<uint8_t>(scale)};
}

size_t DataType::byte_width() const {
  switch (id) {
    case TypeId::kInt64:
    case TypeId::kFloat64:
    case TypeId::kDecimal:
      return 8;
    case TypeId::kDate32:
      return 4;
    case TypeId::kBool:
      return 1;
    case TypeId::kString:
      return 0;
  }
  return 0;
}

std::string DataType::to_string() const {
  switch (id) {
    case TypeId::kInt64: return "INT64";
    case TypeId::kFloat64: return "FLOAT64";
    case TypeId::kDecimal:
      return "DECIMAL(" + std::to_string(precision) + "," + std::to_string(scale) + ")";
    case TypeId::kDate32: return "DATE32";
    case TypeId::kBool: return "BOOL";
    case TypeId::kString: return "STRING";
  }
  return "?";
}

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

DataType DataType::parse(std::string_view text) {
  if (text == "INT64") return int64();
  if (text == "FLOAT64") return float64();
  if (text == "DATE32") return date32();
  if (text == "BOOL") return boolean();
  if (text == "STRING") return string();
  if (text.starts_with("DECIMAL(") && text.ends_with(")")) {
    auto inner = text.substr(8, text.size() - 9);
    auto comma = inner.find(',');
    if (comma != std::string_view::npos) {
      auto p = parse_int(inner.substr(0, comma));
      auto s = parse_int(inner.substr(comma + 1));
      if (p && s) return decimal(*p, *s);
    }
  }
  raise(ErrorCode::kSyntaxError, "unknown data type '" + std::string(text) + "'");
}

bool comparable(const DataType& a, const DataType& b) {
  if (a.is_numeric() && b.is_numeric()) return true;
  return a.id == b.id;
}

bool same_types(const Schema& a, const Schema& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].type == b[i].type)) return false;
  }
  return true;
}

int64_t pow10_i64(int exponent) {
  static constexpr int64_t kPowers[] = {1LL,
                                        10LL,
                                        100LL,
                                        1000LL,
                                        10000LL,
                                        100000LL,
                                        1000000LL,
                                        10000000LL,
                                        100000000LL,
                                        1000000000LL,
                                        10000000000LL,
                                        100000000000LL,
                                        1000000000000LL,
                                        10000000000000LL,
                                        100000000000000LL,
                                        1000000000000000LL,
                                        10000000000000000LL,
                                        100000000000000000LL,
                                        1000000000000000000LL};
  if (exponent < 0 || exponent > 18) {
    raise(ErrorCode::kArithmeticOverflow, "10^" + std::to_string(exponent) + " out of range");
  }
  return kPowers[exponent];
}

namespace date {

std::optional<int32_t> parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto y = parse_int(text.substr(0, 4));
  auto m = parse_int(text.substr(5, 2));
  auto d = parse_int(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                  std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return static_cast<int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

std::string format(int32_t days) {
  std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace date

namespace decimal {

std::optional<int64_t> parse(std::string_view text, int scale) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) return std::nullopt;
  if (static_cast<int>(frac.size()) > scale) return std::nullopt;
  __int128 value = 0;
  for (char c : whole) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
    if (value > INT64_MAX) return std::nullopt;
  }
  for (int i = 0; i < scale; ++i) {
    int digit = 0;
    if (i < static_cast<int>(frac.size())) {
      char c = frac[i];
      if (c < '0' || c > '9') return std::nullopt;
      digit = c - '0';
    }
    value = value * 10 + digit;
    if (value > INT64_MAX) return std::nullopt;
  }
  return static_cast<int64_t>(negative ? -value : value);
}

std::string format(int64_t scaled, int scale) {
  if (scale == 0) return std::to_string(scaled);
  bool negative = scaled < 0;
  // Work in unsigned to survive INT64_MIN.
  uint64_t magnitude = negative ? uint64_t(0) - static_cast<uint64_t>(scaled) : static_cast<uint64_t>(scaled);
  uint64_t divisor = static_cast<uint64_t>(pow10_i64(scale));
  std::string frac = std::to_string(magnitude % divisor);
  frac.insert(0, static_cast<size_t>(scale) - frac.size(), '0');
  return (negative ? "-" : "") + std::to_string(magnitude / divisor) + "." + frac;
}

}  // namespace decimal

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // fold -0
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_datum(const Datum& d, const DataType& type) {
  if (is_null(d)) return "";
  switch (type.id) {
    case TypeId::kInt64: return std::to_string(std::get<int64_t>(d));
    case TypeId::kFloat64: return format_double(std::get<double>(d));
    case TypeId::kDecimal: return decimal::format(std::get<int64_t>(d), type.scale);
    case TypeId::kDate32: return date::format(static_cast<int32_t>(std::get<int64_t>(d)));
    case TypeId::kBool: return std::get<bool>(d) ? "true" : "false";
    case TypeId::kString: return std::get<std::string>(d);
  }
  return "";
}

std::optional<Datum> parse_datum(std::string_view text, const DataType& type) {
  switch (type.id) {
    case TypeId::kInt64: {
      int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
      return Datum{v};
    }
    case TypeId::kFloat64: {
      double v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
      return Datum{v};
    }
    case TypeId::kDecimal: {
      auto v = decimal::parse(text, type.scale);
      if (!v) return std::nullopt;
      return Datum{*v};
    }
    case TypeId::kDate32: {
      auto v = date::parse(text);
      if (!v) return std::nullopt;
      return Datum{static_cast<int64_t>(*v)};
    }
    case TypeId::kBool:
      if (text == "true" || text == "1") return Datum{true};
      if (text == "false" || text == "0") return Datum{false};
      return std::nullopt;
    case TypeId::kString:
      return Datum{std::string(text)};
  }
  return std::nullopt;
}

}  // namespace siriette
