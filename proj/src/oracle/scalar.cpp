#include "siriette/oracle/scalar.hpp"

#include <cmath>
#include <limits>

namespace siriette::oracle {

using plan::AggFn;
using plan::ArithOp;
using plan::BoolOp;
using plan::CompareOp;
using plan::Expr;
using plan::ExprKind;

namespace {

constexpr __int128 kI64Max = std::numeric_limits<int64_t>::max();
constexpr __int128 kI64Min = std::numeric_limits<int64_t>::min();

int scale(const DataType& t) { return t.id == TypeId::kDecimal ? t.scale : 0; }

__int128 p10(int e) {
  __int128 v = 1;
  while (e-- > 0) v *= 10;
  return v;
}

int64_t narrow(__int128 v, const char* what) {
  if (v > kI64Max || v < kI64Min) raise(ErrorCode::kArithmeticOverflow, what);
  return static_cast<int64_t>(v);
}

double as_double(const Datum& v, const DataType& t) {
  if (t.id == TypeId::kFloat64) return std::get<double>(v);
  double x = static_cast<double>(std::get<int64_t>(v));
  return t.id == TypeId::kDecimal ? x / static_cast<double>(p10(t.scale)) : x;
}

template <class T>
int three_way(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

Datum arith(const Expr& e, const Datum& a, const Datum& b) {
  if (is_null(a) || is_null(b)) return {};
  const auto& lt = e.args[0]->type;
  const auto& rt = e.args[1]->type;
  if (e.type.id == TypeId::kFloat64) {
    double x = as_double(a, lt), y = as_double(b, rt), r = 0;
    switch (e.arith) {
      case ArithOp::kAdd: r = x + y; break;
      case ArithOp::kSub: r = x - y; break;
      case ArithOp::kMul: r = x * y; break;
      case ArithOp::kDiv:
        if (y == 0.0) return {};
        r = x / y;
        break;
    }
    if (!std::isfinite(r)) raise(ErrorCode::kArithmeticOverflow, "floating-point overflow");
    return r;
  }
  __int128 x = std::get<int64_t>(a), y = std::get<int64_t>(b);
  switch (e.arith) {
    case ArithOp::kAdd:
    case ArithOp::kSub: {
      __int128 xs = x * p10(e.type.scale - scale(lt)), ys = y * p10(e.type.scale - scale(rt));
      narrow(xs, "decimal rescale overflow");
      narrow(ys, "decimal rescale overflow");
      return narrow(e.arith == ArithOp::kAdd ? xs + ys : xs - ys, "integer overflow");
    }
    case ArithOp::kMul: return narrow(x * y, "integer overflow");
    case ArithOp::kDiv:
      if (y == 0) return {};
      return narrow(x / y, "integer overflow");
  }
  return {};
}

// Rounds half away from zero.
__int128 round_div(__int128 v, __int128 d) {
  __int128 q = v / d, r = v % d;
  if (r < 0) r = -r;
  if (r * 2 >= d) q += v < 0 ? -1 : 1;
  return q;
}

}  // namespace

int compare_values(const Datum& a, const DataType& at, const Datum& b, const DataType& bt) {
  if (at.id == TypeId::kString) return three_way(std::get<std::string>(a), std::get<std::string>(b));
  if (at.id == TypeId::kBool) return three_way(std::get<bool>(a), std::get<bool>(b));
  if (at.id == TypeId::kFloat64 || bt.id == TypeId::kFloat64) return three_way(as_double(a, at), as_double(b, bt));
  int s = std::max(scale(at), scale(bt));
  __int128 x = static_cast<__int128>(std::get<int64_t>(a)) * p10(s - scale(at));
  __int128 y = static_cast<__int128>(std::get<int64_t>(b)) * p10(s - scale(bt));
  return three_way(x, y);
}

int compare_keys(const Row& a, const Row& b, const std::vector<plan::SortKey>& keys, const Schema& schema) {
  for (const auto& k : keys) {
    const auto& x = a[static_cast<size_t>(k.column)];
    const auto& y = b[static_cast<size_t>(k.column)];
    bool xn = is_null(x), yn = is_null(y);
    if (xn && yn) continue;
    if (xn) return k.nulls_first ? -1 : 1;
    if (yn) return k.nulls_first ? 1 : -1;
    const auto& t = schema[static_cast<size_t>(k.column)].type;
    int c = compare_values(x, t, y, t);
    if (c != 0) return k.ascending ? c : -c;
  }
  return 0;
}

bool like_match(std::string_view pattern, std::string_view s) {
  // Tokenize: 0 = literal, 1 = single, 2 = run.
  std::vector<std::pair<int, char>> p;
  for (size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '\\' && i + 1 < pattern.size()) {
      p.emplace_back(0, pattern[++i]);
    } else if (pattern[i] == '%') {
      p.emplace_back(2, 0);
    } else if (pattern[i] == '_') {
      p.emplace_back(1, 0);
    } else {
      p.emplace_back(0, pattern[i]);
    }
  }
  // dp[j] = pattern prefix of length i matches string prefix of length j.
  std::vector<char> dp(s.size() + 1, 0), next(s.size() + 1, 0);
  dp[0] = 1;
  for (const auto& [kind, c] : p) {
    std::fill(next.begin(), next.end(), 0);
    for (size_t j = 0; j <= s.size(); ++j) {
      if (kind == 2) {
        next[j] = dp[j] || (j > 0 && next[j - 1]);
      } else if (j > 0 && dp[j - 1]) {
        next[j] = kind == 1 || s[j - 1] == c;
      }
    }
    std::swap(dp, next);
  }
  return dp[s.size()];
}

Datum cast_value(const Datum& v, const DataType& from, const DataType& to) {
  if (is_null(v) || from == to) return v;
  if (to.id == TypeId::kString) return format_datum(v, from);
  if (to.id == TypeId::kFloat64) return as_double(v, from);
  __int128 out = 0;
  switch (from.id) {
    case TypeId::kFloat64: {
      double r = std::round(std::get<double>(v) * static_cast<double>(p10(scale(to))));
      if (!(std::fabs(r) < 9.2e18)) raise(ErrorCode::kArithmeticOverflow, "cast overflow");
      out = static_cast<__int128>(r);
      break;
    }
    case TypeId::kBool: out = std::get<bool>(v) ? 1 : 0; break;
    case TypeId::kString: raise(ErrorCode::kTypeMismatch, "cannot cast STRING");
    default: {
      __int128 x = std::get<int64_t>(v);
      if (to.id == TypeId::kBool) return x != 0;
      if (to.id == TypeId::kDate32) {
        if (x > std::numeric_limits<int32_t>::max() || x < std::numeric_limits<int32_t>::min()) {
          raise(ErrorCode::kArithmeticOverflow, "date out of range");
        }
        return static_cast<int64_t>(x);
      }
      int d = scale(to) - scale(from);
      out = d >= 0 ? x * p10(d) : round_div(x, p10(-d));
    }
  }
  if (to.id == TypeId::kDecimal && to.precision < kMaxDecimalPrecision) {
    __int128 bound = p10(to.precision);
    if (out >= bound || out <= -bound) raise(ErrorCode::kArithmeticOverflow, "value exceeds decimal precision");
  }
  return narrow(out, "cast overflow");
}

Datum eval_row(const Expr& e, const Row& row) {
  switch (e.kind) {
    case ExprKind::kColumn: return row[static_cast<size_t>(e.column)];
    case ExprKind::kLiteral: return e.literal;
    case ExprKind::kArith: return arith(e, eval_row(*e.args[0], row), eval_row(*e.args[1], row));
    case ExprKind::kCompare: {
      auto a = eval_row(*e.args[0], row), b = eval_row(*e.args[1], row);
      if (is_null(a) || is_null(b)) return {};
      int c = compare_values(a, e.args[0]->type, b, e.args[1]->type);
      switch (e.compare) {
        case CompareOp::kEq: return c == 0;
        case CompareOp::kNe: return c != 0;
        case CompareOp::kLt: return c < 0;
        case CompareOp::kLe: return c <= 0;
        case CompareOp::kGt: return c > 0;
        case CompareOp::kGe: return c >= 0;
      }
      return {};
    }
    case ExprKind::kBool: {
      if (e.boolean == BoolOp::kNot) {
        auto a = eval_row(*e.args[0], row);
        if (is_null(a)) return {};
        return !std::get<bool>(a);
      }
      bool is_and = e.boolean == BoolOp::kAnd;
      bool unknown = false;
      for (const auto& arg : e.args) {
        auto a = eval_row(*arg, row);
        if (is_null(a)) {
          unknown = true;
        } else if (std::get<bool>(a) != is_and) {
          return !is_and;
        }
      }
      if (unknown) return {};
      return is_and;
    }
    case ExprKind::kLike: {
      auto a = eval_row(*e.args[0], row);
      if (is_null(a)) return {};
      return like_match(e.pattern, std::get<std::string>(a));
    }
    case ExprKind::kCase: {
      size_t pairs = e.args.size() / 2;
      for (size_t p = 0; p < pairs; ++p) {
        auto c = eval_row(*e.args[2 * p], row);
        if (!is_null(c) && std::get<bool>(c)) {
          return cast_value(eval_row(*e.args[2 * p + 1], row), e.args[2 * p + 1]->type, e.type);
        }
      }
      if (e.args.size() % 2 == 1) return cast_value(eval_row(*e.args.back(), row), e.args.back()->type, e.type);
      return {};
    }
    case ExprKind::kCast: return cast_value(eval_row(*e.args[0], row), e.args[0]->type, e.type);
  }
  return {};
}

void AggAccumulator::add_sum(const Datum& v) {
  if (type_.id == TypeId::kFloat64) {
    dsum_ += std::get<double>(v);
  } else {
    isum_ += std::get<int64_t>(v);
  }
}

void AggAccumulator::add_extreme(const Datum& v) {
  if (!has_) {
    extreme_ = v;
    return;
  }
  int c = compare_values(v, type_, extreme_, type_);
  if ((fn_ == AggFn::kMin && c < 0) || (fn_ == AggFn::kMax && c > 0)) extreme_ = v;
}

void AggAccumulator::add_raw(const Datum& v, bool star) {
  if (fn_ == AggFn::kCount) {
    if (star || !is_null(v)) ++count_;
    return;
  }
  if (is_null(v)) return;
  if (fn_ == AggFn::kMin || fn_ == AggFn::kMax) {
    add_extreme(v);
  } else {
    add_sum(v);
    ++count_;
  }
  has_ = true;
}

void AggAccumulator::add_partial(const Datum& acc, const Datum& count) {
  if (fn_ == AggFn::kCount) {
    count_ += std::get<int64_t>(acc);
    return;
  }
  if (fn_ == AggFn::kAvg) count_ += std::get<int64_t>(count);
  if (is_null(acc)) return;
  if (fn_ == AggFn::kMin || fn_ == AggFn::kMax) {
    add_extreme(acc);
  } else {
    add_sum(acc);
  }
  has_ = true;
}

Row AggAccumulator::partial() const {
  auto sum = [&]() -> Datum {
    if (!has_) return {};
    if (type_.id == TypeId::kFloat64) return dsum_;
    if (isum_ > kI64Max || isum_ < kI64Min) raise(ErrorCode::kSumOverflow, "sum exceeds the 64-bit result range");
    return static_cast<int64_t>(isum_);
  };
  switch (fn_) {
    case AggFn::kCount: return {count_};
    case AggFn::kSum: return {sum()};
    case AggFn::kAvg: return {sum(), count_};
    case AggFn::kMin:
    case AggFn::kMax: return {has_ ? extreme_ : Datum{}};
  }
  return {};
}

Datum AggAccumulator::finish() const {
  if (fn_ != AggFn::kAvg) return partial()[0];
  if (count_ == 0) return {};
  double sum = type_.id == TypeId::kFloat64 ? dsum_
                                            : static_cast<double>(isum_) / static_cast<double>(p10(scale(type_)));
  return sum / static_cast<double>(count_);
}

std::vector<Row> to_rows(const Batch& b) {
  std::vector<Row> rows(b.num_rows(), Row(b.num_columns()));
  for (size_t c = 0; c < b.num_columns(); ++c) {
    const auto& col = b.column(c);
    for (size_t r = 0; r < b.num_rows(); ++r) rows[r][c] = col.datum(r);
  }
  return rows;
}

std::vector<Row> to_rows(const Table& t) {
  std::vector<Row> rows;
  for (const auto& b : t.batches()) {
    auto part = to_rows(b);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return rows;
}

Batch from_rows(const std::vector<Row>& rows, std::span<const DataType> types) {
  std::vector<Column> cols;
  std::vector<Datum> values(rows.size());
  for (size_t c = 0; c < types.size(); ++c) {
    for (size_t r = 0; r < rows.size(); ++r) values[r] = rows[r][c];
    cols.push_back(Column::from_datums(types[c], values));
  }
  return Batch(std::move(cols), rows.size());
}

}  // namespace siriette::oracle
