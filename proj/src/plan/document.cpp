#include "siriette/plan/document.hpp"

#include <nlohmann/json.hpp>

#include "siriette/common/error.hpp"

namespace siriette::plan {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

const RelationSet& native_relations() {
  static const RelationSet kSet = {RelKind::kRead,      RelKind::kFilter, RelKind::kProject,
                                   RelKind::kHashJoin,  RelKind::kAggregate, RelKind::kSort,
                                   RelKind::kLimit,     RelKind::kExchange, RelKind::kExchangeSource};
  return kSet;
}

const RelationSet& all_relations() {
  static const RelationSet kSet = [] {
    RelationSet s;
    for (int k = 0; k <= static_cast<int>(RelKind::kDistinct); ++k) s.insert(static_cast<RelKind>(k));
    return s;
  }();
  return kSet;
}

namespace {

[[noreturn]] void syntax(const std::string& what) { raise(ErrorCode::kSyntaxError, what); }

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) syntax("expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) syntax(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string get_string(const json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_string()) syntax(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

int64_t get_int(const json& v, const char* what) {
  if (!v.is_number_integer()) syntax(std::string(what) + " must be an integer");
  return v.get<int64_t>();
}

std::vector<int> get_int_list(const json& obj, const char* key, bool required = true) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) syntax(std::string("missing field \"") + key + "\"");
    return {};
  }
  if (!it->is_array()) syntax(std::string("field \"") + key + "\" must be an array");
  std::vector<int> out;
  for (const auto& v : *it) out.push_back(static_cast<int>(get_int(v, key)));
  return out;
}

DataType get_type(const json& obj) { return DataType::parse(get_string(obj, "type")); }

Datum parse_literal_value(const json& v, const DataType& type) {
  if (v.is_null()) return std::monostate{};
  switch (type.id) {
    case TypeId::kInt64:
      return get_int(v, "INT64 literal");
    case TypeId::kFloat64:
      if (!v.is_number()) syntax("FLOAT64 literal must be a number");
      return v.get<double>();
    case TypeId::kDecimal: {
      if (v.is_number_integer()) return v.get<int64_t>() * pow10_i64(type.scale);
      if (!v.is_string()) syntax("DECIMAL literal must be a string");
      auto parsed = decimal::parse(v.get<std::string>(), type.scale);
      if (!parsed) syntax("bad DECIMAL literal '" + v.get<std::string>() + "'");
      return *parsed;
    }
    case TypeId::kDate32: {
      if (!v.is_string()) syntax("DATE32 literal must be a YYYY-MM-DD string");
      auto parsed = date::parse(v.get<std::string>());
      if (!parsed) syntax("bad DATE32 literal '" + v.get<std::string>() + "'");
      return static_cast<int64_t>(*parsed);
    }
    case TypeId::kBool:
      if (!v.is_boolean()) syntax("BOOL literal must be true or false");
      return v.get<bool>();
    case TypeId::kString:
      if (!v.is_string()) syntax("STRING literal must be a string");
      return v.get<std::string>();
  }
  syntax("bad literal");
}

std::vector<ExprPtr> parse_args(const json& obj, size_t min, size_t max);

ExprPtr parse_expr(const json& obj) {
  std::string op = get_string(obj, "op");
  if (op == "column") {
    auto idx = get_int(field(obj, "index"), "column index");
    return column_ref(static_cast<int>(idx));
  }
  if (op == "literal") {
    auto type = get_type(obj);
    auto it = obj.find("value");
    if (it == obj.end()) syntax("literal without \"value\"");
    return literal(type, parse_literal_value(*it, type));
  }
  static const std::pair<const char*, ArithOp> kArith[] = {
      {"add", ArithOp::kAdd}, {"subtract", ArithOp::kSub}, {"multiply", ArithOp::kMul}, {"divide", ArithOp::kDiv}};
  for (const auto& [name, a] : kArith) {
    if (op == name) {
      auto args = parse_args(obj, 2, 2);
      return arith(a, args[0], args[1]);
    }
  }
  static const std::pair<const char*, CompareOp> kCompare[] = {{"eq", CompareOp::kEq}, {"ne", CompareOp::kNe},
                                                              {"lt", CompareOp::kLt}, {"le", CompareOp::kLe},
                                                              {"gt", CompareOp::kGt}, {"ge", CompareOp::kGe}};
  for (const auto& [name, c] : kCompare) {
    if (op == name) {
      auto args = parse_args(obj, 2, 2);
      return compare(c, args[0], args[1]);
    }
  }
  if (op == "and") return bool_and(parse_args(obj, 2, SIZE_MAX));
  if (op == "or") return bool_or(parse_args(obj, 2, SIZE_MAX));
  if (op == "not") return bool_not(parse_args(obj, 1, 1)[0]);
  if (op == "like") {
    auto args = parse_args(obj, 1, 1);
    return like(args[0], get_string(obj, "pattern"));
  }
  if (op == "case") {
    auto args = parse_args(obj, 2, SIZE_MAX);
    return case_when(std::move(args));
  }
  if (op == "cast") {
    auto args = parse_args(obj, 1, 1);
    return cast(args[0], get_type(obj));
  }
  raise(ErrorCode::kUnknownFunction, "unknown expression operator '" + op + "'");
}

std::vector<ExprPtr> parse_args(const json& obj, size_t min, size_t max) {
  const auto& args = field(obj, "args");
  if (!args.is_array()) syntax("\"args\" must be an array");
  if (args.size() < min || args.size() > max) {
    syntax("operator '" + obj.value("op", std::string("?")) + "' has wrong number of arguments");
  }
  std::vector<ExprPtr> out;
  for (const auto& a : args) out.push_back(parse_expr(a));
  return out;
}

ExchangePattern parse_pattern(const std::string& s) {
  if (s == "broadcast") return ExchangePattern::kBroadcast;
  if (s == "shuffle") return ExchangePattern::kShuffle;
  if (s == "merge") return ExchangePattern::kMerge;
  if (s == "multicast") return ExchangePattern::kMulticast;
  syntax("unknown exchange pattern '" + s + "'");
}

std::vector<SortKey> parse_sort_keys(const json& arr) {
  if (!arr.is_array()) syntax("sort keys must be an array");
  std::vector<SortKey> out;
  for (const auto& k : arr) {
    SortKey key;
    key.column = static_cast<int>(get_int(field(k, "column"), "sort column"));
    std::string order = k.value("order", std::string("asc"));
    if (order != "asc" && order != "desc") syntax("sort order must be asc or desc");
    key.ascending = order == "asc";
    std::string nulls = k.value("nulls", std::string("last"));
    if (nulls != "first" && nulls != "last") syntax("nulls must be first or last");
    key.nulls_first = nulls == "first";
    out.push_back(key);
  }
  return out;
}

Schema parse_schema(const json& arr) {
  if (!arr.is_array()) syntax("schema must be an array");
  Schema out;
  for (const auto& f : arr) {
    out.push_back(Field{get_string(f, "name"), get_type(f), f.value("nullable", true)});
  }
  return out;
}

RelPtr parse_rel(const json& obj, const RelationSet& accepted) {
  std::string kind_name = get_string(obj, "kind");
  auto kind = rel_kind_from_name(kind_name);
  if (!kind || !accepted.contains(*kind)) {
    raise(ErrorCode::kUnknownRelation, "unsupported relation kind '" + kind_name + "'");
  }
  auto node = std::make_shared<RelNode>();
  if (auto it = obj.find("inputs"); it != obj.end()) {
    if (!it->is_array()) syntax("\"inputs\" must be an array");
    for (const auto& child : *it) node->inputs.push_back(parse_rel(child, accepted));
  }
  auto arity = [&](size_t expected) {
    if (node->inputs.size() != expected) {
      syntax("'" + kind_name + "' expects " + std::to_string(expected) + " input(s), found " +
             std::to_string(node->inputs.size()));
    }
  };
  switch (*kind) {
    case RelKind::kRead: {
      arity(0);
      ReadRel r;
      r.table = get_string(obj, "table");
      r.columns = get_int_list(obj, "columns");
      if (auto it = obj.find("predicate"); it != obj.end() && !it->is_null()) r.predicate = parse_expr(*it);
      node->rel = std::move(r);
      break;
    }
    case RelKind::kFilter:
      arity(1);
      node->rel = FilterRel{parse_expr(field(obj, "condition"))};
      break;
    case RelKind::kProject: {
      arity(1);
      ProjectRel p;
      const auto& exprs = field(obj, "expressions");
      if (!exprs.is_array() || exprs.empty()) syntax("project needs a non-empty \"expressions\" array");
      for (const auto& e : exprs) p.expressions.push_back(parse_expr(e));
      if (auto it = obj.find("names"); it != obj.end()) {
        if (!it->is_array() || it->size() != p.expressions.size()) syntax("\"names\" must match \"expressions\"");
        for (const auto& n : *it) p.names.push_back(n.get<std::string>());
      }
      node->rel = std::move(p);
      break;
    }
    case RelKind::kHashJoin: {
      arity(2);
      JoinRel j;
      std::string type = obj.value("join_type", std::string("inner"));
      if (type == "inner") {
        j.type = JoinType::kInner;
      } else if (type == "left") {
        j.type = JoinType::kLeft;
      } else if (type == "semi") {
        j.type = JoinType::kSemi;
      } else if (type == "anti") {
        j.type = JoinType::kAnti;
      } else {
        syntax("unknown join type '" + type + "'");
      }
      const auto& keys = field(obj, "keys");
      if (!keys.is_array() || keys.empty()) syntax("hash_join needs a non-empty \"keys\" array");
      for (const auto& k : keys) {
        if (!k.is_array() || k.size() != 2) syntax("join key must be a [left, right] pair");
        j.keys.push_back(JoinKey{static_cast<int>(get_int(k[0], "join key")), static_cast<int>(get_int(k[1], "join key"))});
      }
      node->rel = std::move(j);
      break;
    }
    case RelKind::kAggregate: {
      arity(1);
      AggregateRel a;
      a.group_by = get_int_list(obj, "group_by", false);
      std::string phase = obj.value("phase", std::string("single"));
      if (phase == "single") {
        a.phase = AggPhase::kSingle;
      } else if (phase == "partial") {
        a.phase = AggPhase::kPartial;
      } else if (phase == "final") {
        a.phase = AggPhase::kFinal;
      } else {
        syntax("unknown aggregate phase '" + phase + "'");
      }
      const auto& measures = field(obj, "measures");
      if (!measures.is_array()) syntax("\"measures\" must be an array");
      for (const auto& m : measures) {
        Measure measure;
        std::string fn = get_string(m, "fn");
        if (fn == "sum") {
          measure.fn = AggFn::kSum;
        } else if (fn == "count") {
          measure.fn = AggFn::kCount;
        } else if (fn == "min") {
          measure.fn = AggFn::kMin;
        } else if (fn == "max") {
          measure.fn = AggFn::kMax;
        } else if (fn == "avg") {
          measure.fn = AggFn::kAvg;
        } else {
          raise(ErrorCode::kUnknownFunction, "unknown aggregate function '" + fn + "'");
        }
        if (auto it = m.find("arg"); it != m.end() && !it->is_null()) measure.arg = parse_expr(*it);
        if (!measure.arg && measure.fn != AggFn::kCount) syntax("aggregate '" + fn + "' needs an \"arg\"");
        measure.name = m.value("name", std::string());
        a.measures.push_back(std::move(measure));
      }
      if (a.group_by.empty() && a.measures.empty()) syntax("aggregate without keys or measures");
      node->rel = std::move(a);
      break;
    }
    case RelKind::kSort: {
      arity(1);
      SortRel s{parse_sort_keys(field(obj, "keys"))};
      if (s.keys.empty()) syntax("sort needs at least one key");
      node->rel = std::move(s);
      break;
    }
    case RelKind::kLimit: {
      arity(1);
      auto n = get_int(field(obj, "count"), "limit count");
      if (n < 0) syntax("limit count must be >= 0");
      node->rel = LimitRel{n};
      break;
    }
    case RelKind::kExchange: {
      arity(1);
      ExchangeRel e;
      e.pattern = parse_pattern(get_string(obj, "pattern"));
      e.keys = get_int_list(obj, "keys", false);
      e.targets = get_int_list(obj, "targets", false);
      if (e.pattern == ExchangePattern::kShuffle && e.keys.empty()) syntax("shuffle exchange needs \"keys\"");
      if (e.pattern == ExchangePattern::kMulticast && e.targets.empty()) {
        syntax("multicast exchange needs \"targets\"");
      }
      if (e.pattern == ExchangePattern::kMerge) {
        if (node->inputs[0]->kind() != RelKind::kSort) syntax("merge exchange input must be a sort");
        const auto& sort_keys = std::get<SortRel>(node->inputs[0]->rel).keys;
        if (!e.keys.empty()) {
          bool match = e.keys.size() == sort_keys.size();
          for (size_t i = 0; match && i < e.keys.size(); ++i) match = e.keys[i] == sort_keys[i].column;
          if (!match) syntax("merge exchange keys must match its sort keys");
        }
      }
      node->rel = std::move(e);
      break;
    }
    case RelKind::kExchangeSource: {
      arity(0);
      ExchangeSourceRel s;
      s.exchange_id = static_cast<uint32_t>(get_int(field(obj, "exchange_id"), "exchange_id"));
      s.pattern = parse_pattern(get_string(obj, "pattern"));
      s.schema = parse_schema(field(obj, "schema"));
      if (auto it = obj.find("merge_keys"); it != obj.end()) s.merge_keys = parse_sort_keys(*it);
      node->rel = std::move(s);
      break;
    }
    case RelKind::kUnionAll:
      if (node->inputs.size() < 2) syntax("union_all needs at least two inputs");
      node->rel = UnionAllRel{};
      break;
    case RelKind::kDistinct:
      arity(1);
      node->rel = DistinctRel{};
      break;
  }
  return node;
}

ojson literal_to_json(const Datum& v, const DataType& type) {
  if (is_null(v)) return nullptr;
  switch (type.id) {
    case TypeId::kInt64: return std::get<int64_t>(v);
    case TypeId::kFloat64: return std::get<double>(v);
    case TypeId::kBool: return std::get<bool>(v);
    default: return format_datum(v, type);
  }
}

ojson expr_to_json(const Expr& e) {
  ojson out;
  auto args = [&] {
    ojson arr = ojson::array();
    for (const auto& a : e.args) arr.push_back(expr_to_json(*a));
    return arr;
  };
  switch (e.kind) {
    case ExprKind::kColumn:
      out["op"] = "column";
      out["index"] = e.column;
      break;
    case ExprKind::kLiteral:
      out["op"] = "literal";
      out["type"] = e.type.to_string();
      out["value"] = literal_to_json(e.literal, e.type);
      break;
    case ExprKind::kArith:
      out["op"] = std::string(arith_name(e.arith));
      out["args"] = args();
      break;
    case ExprKind::kCompare:
      out["op"] = std::string(compare_name(e.compare));
      out["args"] = args();
      break;
    case ExprKind::kBool:
      out["op"] = e.boolean == BoolOp::kAnd ? "and" : e.boolean == BoolOp::kOr ? "or" : "not";
      out["args"] = args();
      break;
    case ExprKind::kLike:
      out["op"] = "like";
      out["pattern"] = e.pattern;
      out["args"] = args();
      break;
    case ExprKind::kCase:
      out["op"] = "case";
      out["args"] = args();
      break;
    case ExprKind::kCast:
      out["op"] = "cast";
      out["type"] = e.type.to_string();
      out["args"] = args();
      break;
  }
  return out;
}

ojson sort_keys_to_json(const std::vector<SortKey>& keys) {
  ojson arr = ojson::array();
  for (const auto& k : keys) {
    arr.push_back({{"column", k.column}, {"order", k.ascending ? "asc" : "desc"}, {"nulls", k.nulls_first ? "first" : "last"}});
  }
  return arr;
}

ojson rel_to_json(const Rel& rel, const std::vector<ojson>& inputs) {
  ojson out;
  out["kind"] = std::string(rel_kind_name(static_cast<RelKind>(rel.index())));
  out["inputs"] = ojson::array();
  for (const auto& in : inputs) out["inputs"].push_back(in);
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, ReadRel>) {
          out["table"] = r.table;
          out["columns"] = r.columns;
          if (r.predicate) out["predicate"] = expr_to_json(*r.predicate);
        } else if constexpr (std::is_same_v<R, FilterRel>) {
          out["condition"] = expr_to_json(*r.condition);
        } else if constexpr (std::is_same_v<R, ProjectRel>) {
          out["expressions"] = ojson::array();
          for (const auto& e : r.expressions) out["expressions"].push_back(expr_to_json(*e));
          if (!r.names.empty()) out["names"] = r.names;
        } else if constexpr (std::is_same_v<R, JoinRel>) {
          out["join_type"] = std::string(join_type_name(r.type));
          out["keys"] = ojson::array();
          for (const auto& k : r.keys) out["keys"].push_back({k.left, k.right});
        } else if constexpr (std::is_same_v<R, AggregateRel>) {
          out["group_by"] = r.group_by;
          out["measures"] = ojson::array();
          for (const auto& m : r.measures) {
            ojson mj;
            mj["fn"] = std::string(agg_fn_name(m.fn));
            if (m.arg) mj["arg"] = expr_to_json(*m.arg);
            if (!m.name.empty()) mj["name"] = m.name;
            out["measures"].push_back(mj);
          }
          out["phase"] = std::string(agg_phase_name(r.phase));
        } else if constexpr (std::is_same_v<R, SortRel>) {
          out["keys"] = sort_keys_to_json(r.keys);
        } else if constexpr (std::is_same_v<R, LimitRel>) {
          out["count"] = r.count;
        } else if constexpr (std::is_same_v<R, ExchangeRel>) {
          out["pattern"] = std::string(pattern_name(r.pattern));
          if (!r.keys.empty()) out["keys"] = r.keys;
          if (!r.targets.empty()) out["targets"] = r.targets;
        } else if constexpr (std::is_same_v<R, ExchangeSourceRel>) {
          out["exchange_id"] = r.exchange_id;
          out["pattern"] = std::string(pattern_name(r.pattern));
          out["schema"] = ojson::array();
          for (const auto& f : r.schema) {
            out["schema"].push_back({{"name", f.name}, {"type", f.type.to_string()}, {"nullable", f.nullable}});
          }
          if (!r.merge_keys.empty()) out["merge_keys"] = sort_keys_to_json(r.merge_keys);
        }
      },
      rel);
  return out;
}

ojson rel_node_to_json(const RelNode& node) {
  std::vector<ojson> inputs;
  for (const auto& in : node.inputs) inputs.push_back(rel_node_to_json(*in));
  return rel_to_json(node.rel, inputs);
}

ojson physical_to_json(const PhysicalNode& node) {
  std::vector<ojson> inputs;
  for (const auto& in : node.inputs) inputs.push_back(physical_to_json(*in));
  return rel_to_json(node.rel, inputs);
}

}  // namespace

PlanGraph parse_plan(std::string_view document, const RelationSet& accepted) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    syntax(std::string("malformed plan document: ") + e.what());
  }
  try {
    PlanGraph g;
    if (!doc.is_object()) syntax("plan document must be an object");
    g.catalog_ref = doc.value("catalog_ref", std::string());
    g.root = parse_rel(field(doc, "root"), accepted);
    return g;
  } catch (const json::exception& e) {
    syntax(std::string("malformed plan document: ") + e.what());
  }
}

std::string print_plan(const PlanGraph& graph, bool pretty) {
  ojson doc;
  doc["catalog_ref"] = graph.catalog_ref;
  doc["root"] = rel_node_to_json(*graph.root);
  return doc.dump(pretty ? 2 : -1);
}

std::string print_physical(const PhysicalNode& root, const std::string& catalog_ref, bool pretty) {
  ojson doc;
  doc["catalog_ref"] = catalog_ref;
  doc["root"] = physical_to_json(root);
  return doc.dump(pretty ? 2 : -1);
}

std::string print_expr(const Expr& expr) { return expr_to_json(expr).dump(); }

}  // namespace siriette::plan
