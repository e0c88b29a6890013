#include <cmath>
#include <limits>

#include "like.hpp"
#include "siriette/kernels/kernels.hpp"

namespace siriette::kernels {

using plan::ArithOp;
using plan::BoolOp;
using plan::CompareOp;
using plan::Expr;
using plan::ExprKind;

namespace {

using Valid = std::vector<uint8_t>;

template <class T>
Column finish(DataType type, std::vector<T> values, const Valid& valid) {
  Bitmap bits;
  bool any_null = false;
  for (auto v : valid) {
    if (!v) {
      any_null = true;
      break;
    }
  }
  if (any_null) {
    bits.assign(bitmap::bytes_for(valid.size()), 0);
    for (size_t i = 0; i < valid.size(); ++i) {
      if (valid[i]) bitmap::set(bits.data(), i, true);
    }
  }
  return Column::make<T>(type, std::move(values), std::move(bits));
}

Valid validity_of(const Column& c) {
  Valid v(c.size(), 1);
  if (c.has_validity()) {
    for (size_t i = 0; i < c.size(); ++i) v[i] = c.is_valid(i);
  }
  return v;
}

Valid both_valid(const Column& a, const Column& b) {
  Valid v(a.size(), 1);
  if (a.has_validity() || b.has_validity()) {
    for (size_t i = 0; i < a.size(); ++i) v[i] = a.is_valid(i) && b.is_valid(i);
  }
  return v;
}

int scale_of(const DataType& t) { return t.id == TypeId::kDecimal ? t.scale : 0; }

[[noreturn]] void overflow(const char* what) { raise(ErrorCode::kArithmeticOverflow, what); }

std::vector<double> to_doubles(const Column& c) {
  std::vector<double> out(c.size());
  switch (c.type().id) {
    case TypeId::kFloat64: {
      auto v = c.values<double>();
      out.assign(v.begin(), v.end());
      break;
    }
    case TypeId::kInt64: {
      auto v = c.values<int64_t>();
      for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(v[i]);
      break;
    }
    case TypeId::kDecimal: {
      auto v = c.values<int64_t>();
      double div = static_cast<double>(pow10_i64(c.type().scale));
      for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(v[i]) / div;
      break;
    }
    default: raise(ErrorCode::kInternal, "to_doubles over non-numeric column");
  }
  return out;
}

// Int64/decimal values rescaled to `scale` (which must be >= the column's).
std::vector<int64_t> to_scaled(const Column& c, int scale, const Valid& valid) {
  auto v = c.values<int64_t>();
  int from = scale_of(c.type());
  if (from == scale) return {v.begin(), v.end()};
  int64_t mul = pow10_i64(scale - from);
  std::vector<int64_t> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (valid[i] && __builtin_mul_overflow(v[i], mul, &out[i])) overflow("decimal rescale overflow");
  }
  return out;
}

Column broadcast(const Datum& d, const DataType& t, size_t n) {
  if (is_null(d)) return Column::nulls(t, n);
  switch (t.id) {
    case TypeId::kInt64:
    case TypeId::kDecimal: return Column::make<int64_t>(t, std::vector<int64_t>(n, std::get<int64_t>(d)));
    case TypeId::kFloat64: return Column::make<double>(t, std::vector<double>(n, std::get<double>(d)));
    case TypeId::kDate32:
      return Column::make<int32_t>(t, std::vector<int32_t>(n, static_cast<int32_t>(std::get<int64_t>(d))));
    case TypeId::kBool: return Column::make<uint8_t>(t, std::vector<uint8_t>(n, std::get<bool>(d) ? 1 : 0));
    case TypeId::kString: {
      const auto& s = std::get<std::string>(d);
      StringData data;
      data.offsets.resize(n + 1);
      data.bytes.reserve(s.size() * n);
      for (size_t i = 0; i < n; ++i) {
        data.bytes += s;
        data.offsets[i + 1] = static_cast<int64_t>(data.bytes.size());
      }
      return Column::make_strings(std::move(data));
    }
  }
  return Column::nulls(t, n);
}

Column eval_arith(const Expr& e, const Column& l, const Column& r) {
  size_t n = l.size();
  Valid valid = both_valid(l, r);
  if (e.type.id == TypeId::kFloat64) {
    auto a = to_doubles(l), b = to_doubles(r);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
      switch (e.arith) {
        case ArithOp::kAdd: out[i] = a[i] + b[i]; break;
        case ArithOp::kSub: out[i] = a[i] - b[i]; break;
        case ArithOp::kMul: out[i] = a[i] * b[i]; break;
        case ArithOp::kDiv:
          if (b[i] == 0.0) {
            valid[i] = 0;
          } else {
            out[i] = a[i] / b[i];
          }
          break;
      }
      if (valid[i] && !std::isfinite(out[i])) overflow("floating-point overflow");
    }
    return finish(e.type, std::move(out), valid);
  }

  std::vector<int64_t> a, b;
  if (e.arith == ArithOp::kAdd || e.arith == ArithOp::kSub) {
    a = to_scaled(l, e.type.scale, valid);
    b = to_scaled(r, e.type.scale, valid);
  } else {
    auto lv = l.values<int64_t>(), rv = r.values<int64_t>();
    a.assign(lv.begin(), lv.end());
    b.assign(rv.begin(), rv.end());
  }
  std::vector<int64_t> out(n, 0);
  for (size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    bool bad = false;
    switch (e.arith) {
      case ArithOp::kAdd: bad = __builtin_add_overflow(a[i], b[i], &out[i]); break;
      case ArithOp::kSub: bad = __builtin_sub_overflow(a[i], b[i], &out[i]); break;
      case ArithOp::kMul: bad = __builtin_mul_overflow(a[i], b[i], &out[i]); break;
      case ArithOp::kDiv:
        if (b[i] == 0) {
          valid[i] = 0;
        } else if (a[i] == std::numeric_limits<int64_t>::min() && b[i] == -1) {
          bad = true;
        } else {
          out[i] = a[i] / b[i];
        }
        break;
    }
    if (bad) overflow("integer overflow");
  }
  return finish(e.type, std::move(out), valid);
}

bool apply(CompareOp op, int c) {
  switch (op) {
    case CompareOp::kEq: return c == 0;
    case CompareOp::kNe: return c != 0;
    case CompareOp::kLt: return c < 0;
    case CompareOp::kLe: return c <= 0;
    case CompareOp::kGt: return c > 0;
    case CompareOp::kGe: return c >= 0;
  }
  return false;
}

template <class A, class B>
void compare_loop(CompareOp op, const A& a, const B& b, const Valid& valid, std::vector<uint8_t>& out) {
  for (size_t i = 0; i < out.size(); ++i) {
    if (!valid[i]) continue;
    int c = a[i] < b[i] ? -1 : (b[i] < a[i] ? 1 : 0);
    out[i] = apply(op, c);
  }
}

Column eval_compare(const Expr& e, const Column& l, const Column& r) {
  size_t n = l.size();
  Valid valid = both_valid(l, r);
  std::vector<uint8_t> out(n, 0);
  const auto& lt = l.type();
  const auto& rt = r.type();
  if (lt.id == TypeId::kString) {
    for (size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      int c = l.string_at(i).compare(r.string_at(i));
      out[i] = apply(e.compare, c);
    }
  } else if (lt.id == TypeId::kFloat64 || rt.id == TypeId::kFloat64) {
    compare_loop(e.compare, to_doubles(l), to_doubles(r), valid, out);
  } else if (lt.is_numeric()) {
    int ls = scale_of(lt), rs = scale_of(rt), s = std::max(ls, rs);
    auto lv = l.values<int64_t>(), rv = r.values<int64_t>();
    __int128 lm = pow10_i64(s - ls), rm = pow10_i64(s - rs);
    for (size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      __int128 a = lv[i] * lm, b = rv[i] * rm;
      out[i] = apply(e.compare, a < b ? -1 : (b < a ? 1 : 0));
    }
  } else if (lt.id == TypeId::kDate32) {
    compare_loop(e.compare, l.values<int32_t>(), r.values<int32_t>(), valid, out);
  } else {
    auto lv = l.values<uint8_t>(), rv = r.values<uint8_t>();
    for (size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      int a = lv[i] != 0, b = rv[i] != 0;
      out[i] = apply(e.compare, a - b);
    }
  }
  return finish(DataType::boolean(), std::move(out), valid);
}

Column eval_bool(const Expr& e, const std::vector<Column>& args, size_t n) {
  std::vector<uint8_t> out(n, 0);
  Valid valid(n, 1);
  if (e.boolean == BoolOp::kNot) {
    const auto& a = args[0];
    auto v = a.values<uint8_t>();
    for (size_t i = 0; i < n; ++i) {
      valid[i] = a.is_valid(i);
      out[i] = v[i] == 0;
    }
    return finish(DataType::boolean(), std::move(out), valid);
  }
  // AND: a false operand dominates; OR: a true operand dominates.
  bool dominant = e.boolean == BoolOp::kOr;
  std::vector<uint8_t> decided(n, 0), saw_null(n, 0);
  for (const auto& a : args) {
    auto v = a.values<uint8_t>();
    for (size_t i = 0; i < n; ++i) {
      if (decided[i]) continue;
      if (!a.is_valid(i)) {
        saw_null[i] = 1;
      } else if ((v[i] != 0) == dominant) {
        decided[i] = 1;
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    if (decided[i]) {
      out[i] = dominant;
    } else if (saw_null[i]) {
      valid[i] = 0;
    } else {
      out[i] = !dominant;
    }
  }
  return finish(DataType::boolean(), std::move(out), valid);
}

Column eval_like(const Expr& e, const Column& in) {
  LikeMatcher m(e.pattern);
  size_t n = in.size();
  std::vector<uint8_t> out(n, 0);
  Valid valid = validity_of(in);
  for (size_t i = 0; i < n; ++i) {
    if (valid[i]) out[i] = m.match(in.string_at(i));
  }
  return finish(DataType::boolean(), std::move(out), valid);
}

Column eval_case(const Expr& e, const std::vector<Column>& args, size_t n) {
  size_t pairs = args.size() / 2;
  bool has_else = args.size() % 2 == 1;
  // Concatenate all branch values (plus a trailing null run when there is no
  // else) and pick per row by offset.
  std::vector<Column> sources;
  for (size_t p = 0; p < pairs; ++p) sources.push_back(cast_column(args[2 * p + 1], e.type));
  sources.push_back(has_else ? cast_column(args.back(), e.type) : Column::nulls(e.type, n));
  std::vector<uint64_t> pick(n);
  for (size_t i = 0; i < n; ++i) {
    size_t src = pairs;
    for (size_t p = 0; p < pairs; ++p) {
      const auto& cond = args[2 * p];
      if (cond.is_valid(i) && cond.values<uint8_t>()[i]) {
        src = p;
        break;
      }
    }
    pick[i] = src * n + i;
  }
  return gather(concat_columns(sources), SelectionVector::wide(std::move(pick)));
}

// Half away from zero.
int64_t div_round(__int128 v, __int128 d) {
  __int128 q = v / d, r = v % d;
  if (2 * (r < 0 ? -r : r) >= d) q += v < 0 ? -1 : 1;
  if (q > std::numeric_limits<int64_t>::max() || q < std::numeric_limits<int64_t>::min()) overflow("cast overflow");
  return static_cast<int64_t>(q);
}

int64_t round_double(double v) {
  double r = std::round(v);
  if (!(r >= -9.2233720368547758e18 && r < 9.2233720368547758e18)) overflow("cast overflow");
  return static_cast<int64_t>(r);
}

void check_precision(int64_t v, const DataType& t) {
  if (t.precision >= kMaxDecimalPrecision) return;
  int64_t bound = pow10_i64(t.precision);
  if (v >= bound || v <= -bound) overflow("value exceeds decimal precision");
}

}  // namespace

Column cast_column(const Column& c, const DataType& to) {
  const auto& from = c.type();
  if (from == to) return c;
  size_t n = c.size();
  Valid valid = validity_of(c);

  if (to.id == TypeId::kString) {
    ColumnBuilder b(to);
    b.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      if (!valid[i]) {
        b.append_null();
      } else {
        b.append_string(format_datum(c.datum(i), from));
      }
    }
    return b.finish();
  }
  if (to.id == TypeId::kFloat64) return finish(to, to_doubles(c), valid);

  std::vector<int64_t> out(n, 0);
  switch (from.id) {
    case TypeId::kInt64:
    case TypeId::kDecimal: {
      auto v = c.values<int64_t>();
      if (to.id == TypeId::kBool) {
        std::vector<uint8_t> b(n);
        for (size_t i = 0; i < n; ++i) b[i] = v[i] != 0;
        return finish(to, std::move(b), valid);
      }
      if (to.id == TypeId::kDate32) {
        std::vector<int32_t> d(n, 0);
        for (size_t i = 0; i < n; ++i) {
          if (!valid[i]) continue;
          if (v[i] > std::numeric_limits<int32_t>::max() || v[i] < std::numeric_limits<int32_t>::min()) {
            overflow("date out of range");
          }
          d[i] = static_cast<int32_t>(v[i]);
        }
        return finish(to, std::move(d), valid);
      }
      int fs = scale_of(from), ts = scale_of(to);
      for (size_t i = 0; i < n; ++i) {
        if (!valid[i]) continue;
        if (ts >= fs) {
          if (__builtin_mul_overflow(v[i], pow10_i64(ts - fs), &out[i])) overflow("cast overflow");
        } else {
          out[i] = div_round(v[i], pow10_i64(fs - ts));
        }
        if (to.id == TypeId::kDecimal) check_precision(out[i], to);
      }
      break;
    }
    case TypeId::kFloat64: {
      auto v = c.values<double>();
      double mul = static_cast<double>(pow10_i64(scale_of(to)));
      for (size_t i = 0; i < n; ++i) {
        if (!valid[i]) continue;
        out[i] = round_double(v[i] * mul);
        if (to.id == TypeId::kDecimal) check_precision(out[i], to);
      }
      break;
    }
    case TypeId::kDate32: {
      auto v = c.values<int32_t>();
      for (size_t i = 0; i < n; ++i) out[i] = v[i];
      break;
    }
    case TypeId::kBool: {
      auto v = c.values<uint8_t>();
      for (size_t i = 0; i < n; ++i) out[i] = v[i] != 0;
      break;
    }
    case TypeId::kString: raise(ErrorCode::kTypeMismatch, "cannot cast STRING to " + to.to_string());
  }
  return finish(to, std::move(out), valid);
}

Column eval_expr(const Expr& e, const Batch& b) {
  size_t n = b.num_rows();
  switch (e.kind) {
    case ExprKind::kColumn: return b.column(static_cast<size_t>(e.column));
    case ExprKind::kLiteral: return broadcast(e.literal, e.type, n);
    case ExprKind::kCast: return cast_column(eval_expr(*e.args[0], b), e.type);
    case ExprKind::kLike: return eval_like(e, eval_expr(*e.args[0], b));
    default: break;
  }
  std::vector<Column> args;
  args.reserve(e.args.size());
  for (const auto& a : e.args) args.push_back(eval_expr(*a, b));
  switch (e.kind) {
    case ExprKind::kArith: return eval_arith(e, args[0], args[1]);
    case ExprKind::kCompare: return eval_compare(e, args[0], args[1]);
    case ExprKind::kBool: return eval_bool(e, args, n);
    case ExprKind::kCase: return eval_case(e, args, n);
    default: break;
  }
  raise(ErrorCode::kInternal, "unhandled expression kind");
}

SelectionVector filter(const Column& predicate) {
  std::vector<uint64_t> out;
  auto v = predicate.values<uint8_t>();
  for (size_t i = 0; i < predicate.size(); ++i) {
    if (v[i] && predicate.is_valid(i)) out.push_back(i);
  }
  return SelectionVector::wide(std::move(out));
}

}  // namespace siriette::kernels
