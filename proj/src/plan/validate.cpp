#include "siriette/plan/validate.hpp"

#include <algorithm>

#include "siriette/common/error.hpp"

namespace siriette::plan {

namespace {

[[noreturn]] void mismatch(const std::string& what) { raise(ErrorCode::kTypeMismatch, what); }

void check_ordinal(int ordinal, size_t arity, const char* what) {
  if (ordinal < 0 || static_cast<size_t>(ordinal) >= arity) {
    raise(ErrorCode::kOrdinalOutOfRange, std::string(what) + " ordinal " + std::to_string(ordinal) +
                                             " out of range for " + std::to_string(arity) + " column(s)");
  }
}

bool literal_matches(const Datum& v, const DataType& t) {
  if (is_null(v)) return true;
  switch (t.id) {
    case TypeId::kInt64:
    case TypeId::kDecimal:
    case TypeId::kDate32:
      return std::holds_alternative<int64_t>(v);
    case TypeId::kFloat64:
      return std::holds_alternative<double>(v);
    case TypeId::kBool:
      return std::holds_alternative<bool>(v);
    case TypeId::kString:
      return std::holds_alternative<std::string>(v);
  }
  return false;
}

// Common type for CASE branches.
DataType unify(const DataType& a, const DataType& b) {
  if (a == b) return a;
  if (a.is_numeric() && b.is_numeric()) {
    if (a.id == TypeId::kFloat64 || b.id == TypeId::kFloat64) return DataType::float64();
    int scale = std::max<int>(a.id == TypeId::kDecimal ? a.scale : 0, b.id == TypeId::kDecimal ? b.scale : 0);
    return DataType::decimal(kMaxDecimalPrecision, scale);
  }
  mismatch("incompatible branch types " + a.to_string() + " and " + b.to_string());
}

bool castable(const DataType& from, const DataType& to) {
  if (from == to || to.id == TypeId::kString) return true;
  if (from.is_numeric() && to.is_numeric()) return true;
  auto pair = [&](TypeId x, TypeId y) { return (from.id == x && to.id == y) || (from.id == y && to.id == x); };
  return pair(TypeId::kDate32, TypeId::kInt64) || pair(TypeId::kBool, TypeId::kInt64);
}

DataType sum_type(const DataType& input) {
  switch (input.id) {
    case TypeId::kInt64: return DataType::int64();
    case TypeId::kFloat64: return DataType::float64();
    case TypeId::kDecimal: return DataType::decimal(kMaxDecimalPrecision, input.scale);
    default: mismatch("sum/avg over non-numeric " + input.to_string());
  }
}

}  // namespace

ExprPtr resolve_expr(const ExprPtr& expr, const Schema& input) {
  Expr e = *expr;
  for (auto& a : e.args) a = resolve_expr(a, input);
  auto arg_type = [&](size_t i) { return e.args[i]->type; };
  switch (e.kind) {
    case ExprKind::kColumn:
      check_ordinal(e.column, input.size(), "column");
      e.type = input[static_cast<size_t>(e.column)].type;
      break;
    case ExprKind::kLiteral:
      if (!literal_matches(e.literal, e.type)) mismatch("literal value does not match " + e.type.to_string());
      break;
    case ExprKind::kArith: {
      auto l = arg_type(0), r = arg_type(1);
      if (!l.is_numeric() || !r.is_numeric()) {
        mismatch(std::string(arith_name(e.arith)) + " over " + l.to_string() + " and " + r.to_string());
      }
      if (l.id == TypeId::kFloat64 || r.id == TypeId::kFloat64) {
        e.type = DataType::float64();
      } else if (l.id == TypeId::kDecimal || r.id == TypeId::kDecimal) {
        int ls = l.id == TypeId::kDecimal ? l.scale : 0;
        int rs = r.id == TypeId::kDecimal ? r.scale : 0;
        switch (e.arith) {
          case ArithOp::kAdd:
          case ArithOp::kSub:
            e.type = DataType::decimal(kMaxDecimalPrecision, std::max(ls, rs));
            break;
          case ArithOp::kMul:
            if (ls + rs > kMaxDecimalPrecision) mismatch("decimal product scale exceeds 18");
            e.type = DataType::decimal(kMaxDecimalPrecision, ls + rs);
            break;
          case ArithOp::kDiv:
            e.type = DataType::float64();
            break;
        }
      } else {
        e.type = DataType::int64();
      }
      break;
    }
    case ExprKind::kCompare:
      if (!comparable(arg_type(0), arg_type(1))) {
        mismatch("cannot compare " + arg_type(0).to_string() + " with " + arg_type(1).to_string());
      }
      e.type = DataType::boolean();
      break;
    case ExprKind::kBool:
      if (e.boolean == BoolOp::kNot ? e.args.size() != 1 : e.args.size() < 2) {
        raise(ErrorCode::kSyntaxError, "wrong arity for boolean operator");
      }
      for (const auto& a : e.args) {
        if (a->type.id != TypeId::kBool) mismatch("boolean operator over " + a->type.to_string());
      }
      e.type = DataType::boolean();
      break;
    case ExprKind::kLike:
      if (arg_type(0).id != TypeId::kString) mismatch("like over " + arg_type(0).to_string());
      e.type = DataType::boolean();
      break;
    case ExprKind::kCase: {
      if (e.args.size() < 2) raise(ErrorCode::kSyntaxError, "case needs at least one when/then pair");
      size_t pairs = e.args.size() / 2;
      std::optional<DataType> result;
      for (size_t i = 0; i < pairs; ++i) {
        if (arg_type(2 * i).id != TypeId::kBool) mismatch("case condition must be BOOL");
        result = result ? unify(*result, arg_type(2 * i + 1)) : arg_type(2 * i + 1);
      }
      if (e.args.size() % 2 == 1) result = unify(*result, arg_type(e.args.size() - 1));
      e.type = *result;
      break;
    }
    case ExprKind::kCast:
      if (!castable(arg_type(0), e.type)) {
        mismatch("cannot cast " + arg_type(0).to_string() + " to " + e.type.to_string());
      }
      break;
  }
  e.resolved = true;
  return std::make_shared<const Expr>(std::move(e));
}

DataType aggregate_result_type(AggFn fn, const DataType& input) {
  switch (fn) {
    case AggFn::kSum: return sum_type(input);
    case AggFn::kCount: return DataType::int64();
    case AggFn::kMin:
    case AggFn::kMax: return input;
    case AggFn::kAvg:
      sum_type(input);
      return DataType::float64();
  }
  return input;
}

std::vector<DataType> partial_accumulator_types(AggFn fn, const DataType& input) {
  switch (fn) {
    case AggFn::kSum: return {sum_type(input)};
    case AggFn::kCount: return {DataType::int64()};
    case AggFn::kMin:
    case AggFn::kMax: return {input};
    case AggFn::kAvg: return {sum_type(input), DataType::int64()};
  }
  return {};
}

namespace {

class Validator {
 public:
  Validator(const Catalog& catalog, const ValidateOptions& options) : catalog_(catalog), options_(options) {}

  PhysicalPtr visit(const RelNode& node) {
    auto out = std::make_shared<PhysicalNode>();
    for (const auto& in : node.inputs) out->inputs.push_back(visit(*in));
    const Schema* in0 = out->inputs.empty() ? nullptr : &out->inputs[0]->schema;
    std::visit([&](const auto& rel) { resolve(*out, rel, in0); }, node.rel);
    out->id = next_id_++;
    return out;
  }

 private:
  void resolve(PhysicalNode& out, const ReadRel& rel, const Schema*) {
    const auto& table = catalog_.at(rel.table);
    ReadRel r = rel;
    for (int c : r.columns) {
      check_ordinal(c, table.schema.size(), "read column");
      out.schema.push_back(table.schema[static_cast<size_t>(c)]);
    }
    if (r.predicate) {
      r.predicate = resolve_expr(r.predicate, out.schema);
      if (r.predicate->type.id != TypeId::kBool) mismatch("read predicate must be BOOL");
    }
    out.rel = std::move(r);
  }

  void resolve(PhysicalNode& out, const FilterRel& rel, const Schema* in) {
    FilterRel f{resolve_expr(rel.condition, *in)};
    if (f.condition->type.id != TypeId::kBool) mismatch("filter condition must be BOOL");
    out.schema = *in;
    out.rel = std::move(f);
  }

  void resolve(PhysicalNode& out, const ProjectRel& rel, const Schema* in) {
    ProjectRel p = rel;
    for (size_t i = 0; i < p.expressions.size(); ++i) {
      p.expressions[i] = resolve_expr(p.expressions[i], *in);
      const auto& e = *p.expressions[i];
      std::string name;
      bool nullable = true;
      if (!p.names.empty()) {
        name = p.names[i];
      } else if (e.kind == ExprKind::kColumn) {
        name = (*in)[static_cast<size_t>(e.column)].name;
      } else {
        name = "expr" + std::to_string(i);
      }
      if (e.kind == ExprKind::kColumn) nullable = (*in)[static_cast<size_t>(e.column)].nullable;
      if (e.kind == ExprKind::kLiteral) nullable = is_null(e.literal);
      out.schema.push_back(Field{name, e.type, nullable});
    }
    out.rel = std::move(p);
  }

  void resolve(PhysicalNode& out, const JoinRel& rel, const Schema* in) {
    const Schema& left = *in;
    const Schema& right = out.inputs[1]->schema;
    for (const auto& k : rel.keys) {
      check_ordinal(k.left, left.size(), "join left key");
      check_ordinal(k.right, right.size(), "join right key");
      const auto& lt = left[static_cast<size_t>(k.left)].type;
      const auto& rt = right[static_cast<size_t>(k.right)].type;
      bool same = lt.id == rt.id && (lt.id != TypeId::kDecimal || lt.scale == rt.scale);
      if (!same) mismatch("join key types differ: " + lt.to_string() + " vs " + rt.to_string());
    }
    out.schema = left;
    if (rel.type == JoinType::kInner || rel.type == JoinType::kLeft) {
      for (auto f : right) {
        if (rel.type == JoinType::kLeft) f.nullable = true;
        out.schema.push_back(f);
      }
    }
    out.build_side = BuildSide::kRight;
    out.rel = rel;
  }

  void resolve(PhysicalNode& out, const AggregateRel& rel, const Schema* in) {
    AggregateRel a = rel;
    bool string_key = false;
    for (int g : a.group_by) {
      check_ordinal(g, in->size(), "group key");
      out.schema.push_back((*in)[static_cast<size_t>(g)]);
      string_key = string_key || (*in)[static_cast<size_t>(g)].type.id == TypeId::kString;
    }
    for (size_t i = 0; i < a.measures.size(); ++i) {
      auto& m = a.measures[i];
      if (m.name.empty()) m.name = std::string(agg_fn_name(m.fn)) + "_" + std::to_string(i);
      if (m.arg) m.arg = resolve_expr(m.arg, *in);
      if (a.phase == AggPhase::kFinal) {
        resolve_final_measure(m, *in, out.schema);
        continue;
      }
      DataType input = m.arg ? m.arg->type : DataType::int64();
      if ((m.fn == AggFn::kSum || m.fn == AggFn::kAvg) && !input.is_numeric()) {
        mismatch(std::string(agg_fn_name(m.fn)) + " over " + input.to_string());
      }
      if (a.phase == AggPhase::kSingle) {
        out.schema.push_back(Field{m.name, aggregate_result_type(m.fn, input), m.fn != AggFn::kCount});
      } else {
        auto accs = partial_accumulator_types(m.fn, input);
        if (accs.size() == 2) {
          out.schema.push_back(Field{m.name + "_sum", accs[0], true});
          out.schema.push_back(Field{m.name + "_count", accs[1], false});
        } else {
          out.schema.push_back(Field{m.name, accs[0], m.fn != AggFn::kCount});
        }
      }
    }
    out.strategy = string_key ? GroupStrategy::kSort : GroupStrategy::kHash;
    if (options_.groupby_override) out.strategy = *options_.groupby_override;
    out.rel = std::move(a);
  }

  // Final-phase measures read accumulator columns of a partial layout.
  void resolve_final_measure(const Measure& m, const Schema& in, Schema& schema) {
    if (!m.arg || m.arg->kind != ExprKind::kColumn) {
      mismatch("final aggregate measures must reference accumulator columns");
    }
    const auto& acc = in[static_cast<size_t>(m.arg->column)].type;
    switch (m.fn) {
      case AggFn::kSum:
        sum_type(acc);
        schema.push_back(Field{m.name, acc, true});
        break;
      case AggFn::kCount:
        if (acc.id != TypeId::kInt64) mismatch("count accumulator must be INT64");
        schema.push_back(Field{m.name, acc, false});
        break;
      case AggFn::kMin:
      case AggFn::kMax:
        schema.push_back(Field{m.name, acc, true});
        break;
      case AggFn::kAvg:
        sum_type(acc);
        check_ordinal(m.arg->column + 1, in.size(), "avg count accumulator");
        if (in[static_cast<size_t>(m.arg->column) + 1].type.id != TypeId::kInt64) {
          mismatch("avg count accumulator must be INT64");
        }
        schema.push_back(Field{m.name, DataType::float64(), true});
        break;
    }
  }

  void resolve(PhysicalNode& out, const SortRel& rel, const Schema* in) {
    for (const auto& k : rel.keys) check_ordinal(k.column, in->size(), "sort key");
    out.schema = *in;
    out.rel = rel;
  }

  void resolve(PhysicalNode& out, const LimitRel& rel, const Schema* in) {
    out.schema = *in;
    out.rel = rel;
  }

  void resolve(PhysicalNode& out, const ExchangeRel& rel, const Schema* in) {
    for (int k : rel.keys) check_ordinal(k, in->size(), "exchange key");
    for (int t : rel.targets) {
      if (t < 0) raise(ErrorCode::kOrdinalOutOfRange, "negative multicast target");
    }
    out.schema = *in;
    out.rel = rel;
  }

  void resolve(PhysicalNode& out, const ExchangeSourceRel& rel, const Schema*) {
    for (const auto& k : rel.merge_keys) check_ordinal(k.column, rel.schema.size(), "merge key");
    out.schema = rel.schema;
    out.rel = rel;
  }

  void resolve(PhysicalNode& out, const UnionAllRel& rel, const Schema* in) {
    for (size_t i = 1; i < out.inputs.size(); ++i) {
      if (!same_types(out.inputs[i]->schema, *in)) mismatch("union_all inputs differ in schema");
    }
    out.schema = *in;
    out.rel = rel;
  }

  void resolve(PhysicalNode& out, const DistinctRel& rel, const Schema* in) {
    out.schema = *in;
    out.rel = rel;
  }

  const Catalog& catalog_;
  const ValidateOptions& options_;
  int next_id_ = 0;
};

}  // namespace

PhysicalPlan validate_plan(const PlanGraph& graph, const Catalog& catalog, const ValidateOptions& options) {
  if (!graph.root) raise(ErrorCode::kSyntaxError, "plan has no root");
  Validator v(catalog, options);
  PhysicalPlan plan;
  plan.catalog_ref = graph.catalog_ref;
  plan.root = v.visit(*graph.root);
  plan.nodes = collect_nodes(plan.root);
  return plan;
}

}  // namespace siriette::plan
