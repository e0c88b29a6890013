#include "siriette/plan/plan.hpp"

#include <functional>

#include "siriette/common/error.hpp"

namespace siriette::plan {

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

}  // namespace

ExprPtr column_ref(int ordinal) {
  Expr e;
  e.kind = ExprKind::kColumn;
  e.column = ordinal;
  return make(std::move(e));
}

ExprPtr literal(DataType type, Datum value) {
  Expr e;
  e.kind = ExprKind::kLiteral;
  e.type = type;
  e.literal = std::move(value);
  return make(std::move(e));
}

ExprPtr arith(ArithOp op, ExprPtr lhs, ExprPtr rhs) {
  Expr e;
  e.kind = ExprKind::kArith;
  e.arith = op;
  e.args = {std::move(lhs), std::move(rhs)};
  return make(std::move(e));
}

ExprPtr compare(CompareOp op, ExprPtr lhs, ExprPtr rhs) {
  Expr e;
  e.kind = ExprKind::kCompare;
  e.compare = op;
  e.args = {std::move(lhs), std::move(rhs)};
  return make(std::move(e));
}

ExprPtr bool_and(std::vector<ExprPtr> args) {
  Expr e;
  e.kind = ExprKind::kBool;
  e.boolean = BoolOp::kAnd;
  e.args = std::move(args);
  return make(std::move(e));
}

ExprPtr bool_or(std::vector<ExprPtr> args) {
  Expr e;
  e.kind = ExprKind::kBool;
  e.boolean = BoolOp::kOr;
  e.args = std::move(args);
  return make(std::move(e));
}

ExprPtr bool_not(ExprPtr arg) {
  Expr e;
  e.kind = ExprKind::kBool;
  e.boolean = BoolOp::kNot;
  e.args = {std::move(arg)};
  return make(std::move(e));
}

ExprPtr like(ExprPtr input, std::string pattern) {
  Expr e;
  e.kind = ExprKind::kLike;
  e.pattern = std::move(pattern);
  e.args = {std::move(input)};
  return make(std::move(e));
}

ExprPtr case_when(std::vector<ExprPtr> args) {
  Expr e;
  e.kind = ExprKind::kCase;
  e.args = std::move(args);
  return make(std::move(e));
}

ExprPtr cast(ExprPtr input, DataType target) {
  Expr e;
  e.kind = ExprKind::kCast;
  e.type = target;
  e.args = {std::move(input)};
  return make(std::move(e));
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return structurally_equal(*a, *b);
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case ExprKind::kColumn:
      if (a.column != b.column) return false;
      break;
    case ExprKind::kLiteral:
      if (!(a.type == b.type) || !(a.literal == b.literal)) return false;
      break;
    case ExprKind::kArith:
      if (a.arith != b.arith) return false;
      break;
    case ExprKind::kCompare:
      if (a.compare != b.compare) return false;
      break;
    case ExprKind::kBool:
      if (a.boolean != b.boolean) return false;
      break;
    case ExprKind::kLike:
      if (a.pattern != b.pattern) return false;
      break;
    case ExprKind::kCase:
      break;
    case ExprKind::kCast:
      if (!(a.type == b.type)) return false;
      break;
  }
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (!structurally_equal(a.args[i], b.args[i])) return false;
  }
  return true;
}

std::string_view arith_name(ArithOp op) {
  switch (op) {
    case ArithOp::kAdd: return "add";
    case ArithOp::kSub: return "subtract";
    case ArithOp::kMul: return "multiply";
    case ArithOp::kDiv: return "divide";
  }
  return "?";
}

std::string_view compare_name(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "eq";
    case CompareOp::kNe: return "ne";
    case CompareOp::kLt: return "lt";
    case CompareOp::kLe: return "le";
    case CompareOp::kGt: return "gt";
    case CompareOp::kGe: return "ge";
  }
  return "?";
}

std::string_view rel_kind_name(RelKind kind) {
  switch (kind) {
    case RelKind::kRead: return "read";
    case RelKind::kFilter: return "filter";
    case RelKind::kProject: return "project";
    case RelKind::kHashJoin: return "hash_join";
    case RelKind::kAggregate: return "aggregate";
    case RelKind::kSort: return "sort";
    case RelKind::kLimit: return "limit";
    case RelKind::kExchange: return "exchange";
    case RelKind::kExchangeSource: return "exchange_source";
    case RelKind::kUnionAll: return "union_all";
    case RelKind::kDistinct: return "distinct";
  }
  return "?";
}

std::optional<RelKind> rel_kind_from_name(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(RelKind::kDistinct); ++k) {
    if (rel_kind_name(static_cast<RelKind>(k)) == name) return static_cast<RelKind>(k);
  }
  return std::nullopt;
}

std::string_view join_type_name(JoinType t) {
  switch (t) {
    case JoinType::kInner: return "inner";
    case JoinType::kLeft: return "left";
    case JoinType::kSemi: return "semi";
    case JoinType::kAnti: return "anti";
  }
  return "?";
}

std::string_view agg_fn_name(AggFn f) {
  switch (f) {
    case AggFn::kSum: return "sum";
    case AggFn::kCount: return "count";
    case AggFn::kMin: return "min";
    case AggFn::kMax: return "max";
    case AggFn::kAvg: return "avg";
  }
  return "?";
}

std::string_view agg_phase_name(AggPhase p) {
  switch (p) {
    case AggPhase::kSingle: return "single";
    case AggPhase::kPartial: return "partial";
    case AggPhase::kFinal: return "final";
  }
  return "?";
}

std::string_view pattern_name(ExchangePattern p) {
  switch (p) {
    case ExchangePattern::kBroadcast: return "broadcast";
    case ExchangePattern::kShuffle: return "shuffle";
    case ExchangePattern::kMerge: return "merge";
    case ExchangePattern::kMulticast: return "multicast";
  }
  return "?";
}

namespace {

bool exprs_equal(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!structurally_equal(a[i], b[i])) return false;
  }
  return true;
}

bool rels_equal(const Rel& a, const Rel& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using R = std::decay_t<decltype(x)>;
        const auto& y = std::get<R>(b);
        if constexpr (std::is_same_v<R, ReadRel>) {
          return x.table == y.table && x.columns == y.columns && structurally_equal(x.predicate, y.predicate);
        } else if constexpr (std::is_same_v<R, FilterRel>) {
          return structurally_equal(x.condition, y.condition);
        } else if constexpr (std::is_same_v<R, ProjectRel>) {
          return exprs_equal(x.expressions, y.expressions) && x.names == y.names;
        } else if constexpr (std::is_same_v<R, JoinRel>) {
          return x.type == y.type && x.keys == y.keys;
        } else if constexpr (std::is_same_v<R, AggregateRel>) {
          if (x.group_by != y.group_by || x.phase != y.phase || x.measures.size() != y.measures.size()) return false;
          for (size_t i = 0; i < x.measures.size(); ++i) {
            if (x.measures[i].fn != y.measures[i].fn || x.measures[i].name != y.measures[i].name ||
                !structurally_equal(x.measures[i].arg, y.measures[i].arg)) {
              return false;
            }
          }
          return true;
        } else if constexpr (std::is_same_v<R, SortRel>) {
          return x.keys == y.keys;
        } else if constexpr (std::is_same_v<R, LimitRel>) {
          return x.count == y.count;
        } else if constexpr (std::is_same_v<R, ExchangeRel>) {
          return x.pattern == y.pattern && x.keys == y.keys && x.targets == y.targets;
        } else if constexpr (std::is_same_v<R, ExchangeSourceRel>) {
          return x.exchange_id == y.exchange_id && x.pattern == y.pattern && x.schema == y.schema &&
                 x.merge_keys == y.merge_keys;
        } else {
          return true;
        }
      },
      a);
}

}  // namespace

bool structurally_equal(const RelNode& a, const RelNode& b) {
  if (!rels_equal(a.rel, b.rel) || a.inputs.size() != b.inputs.size()) return false;
  for (size_t i = 0; i < a.inputs.size(); ++i) {
    if (!structurally_equal(*a.inputs[i], *b.inputs[i])) return false;
  }
  return true;
}

void Catalog::add(TableDef table) {
  for (size_t i = 0; i < table.schema.size(); ++i) {
    for (size_t j = 0; j < i; ++j) {
      if (table.schema[i].name == table.schema[j].name) {
        raise(ErrorCode::kInvalidArgument,
              "duplicate column '" + table.schema[i].name + "' in table '" + table.name + "'");
      }
    }
  }
  if (tables_.contains(table.name)) raise(ErrorCode::kInvalidArgument, "duplicate table '" + table.name + "'");
  auto name = table.name;
  tables_.emplace(std::move(name), std::move(table));
}

const TableDef* Catalog::find(const std::string& name) const {
  auto it = tables_.find(name);
  return it == tables_.end() ? nullptr : &it->second;
}

const TableDef& Catalog::at(const std::string& name) const {
  const auto* t = find(name);
  if (!t) raise(ErrorCode::kMissingTable, "table '" + name + "' is not in the catalog");
  return *t;
}

std::vector<const PhysicalNode*> collect_nodes(const PhysicalPtr& root) {
  std::vector<const PhysicalNode*> out;
  std::function<void(const PhysicalNode&)> walk = [&](const PhysicalNode& n) {
    for (const auto& in : n.inputs) walk(*in);
    out.push_back(&n);
  };
  if (root) walk(*root);
  return out;
}

bool physically_equal(const PhysicalNode& a, const PhysicalNode& b) {
  if (a.id != b.id || !rels_equal(a.rel, b.rel) || !(a.schema == b.schema) || a.strategy != b.strategy ||
      a.inputs.size() != b.inputs.size()) {
    return false;
  }
  for (size_t i = 0; i < a.inputs.size(); ++i) {
    if (!physically_equal(*a.inputs[i], *b.inputs[i])) return false;
  }
  return true;
}

bool contains_kind(const PhysicalPtr& root, RelKind kind) {
  if (!root) return false;
  if (root->kind() == kind) return true;
  for (const auto& in : root->inputs) {
    if (contains_kind(in, kind)) return true;
  }
  return false;
}

}  // namespace siriette::plan
