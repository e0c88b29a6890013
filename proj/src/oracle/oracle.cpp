#include "siriette/oracle/oracle.hpp"

#include <algorithm>
#include <set>

#include "siriette/oracle/scalar.hpp"

namespace siriette::oracle {

using namespace plan;

namespace {

bool truthy(const Datum& d) { return !is_null(d) && std::get<bool>(d); }

class Runner {
 public:
  explicit Runner(const OracleInputs& inputs) : inputs_(inputs) {}

  std::vector<Row> run(const PhysicalNode& n) {
    std::vector<std::vector<Row>> in;
    for (const auto& child : n.inputs) in.push_back(run(*child));
    return std::visit([&](const auto& rel) { return apply(n, rel, in); }, n.rel);
  }

 private:
  using Inputs = std::vector<std::vector<Row>>;

  std::vector<Row> apply(const PhysicalNode&, const ReadRel& r, Inputs&) {
    const Table& t = inputs_.tables(r.table);
    std::vector<Row> out;
    for (auto& full : to_rows(t)) {
      Row row;
      row.reserve(r.columns.size());
      for (int c : r.columns) row.push_back(std::move(full[static_cast<size_t>(c)]));
      if (r.predicate && !truthy(eval_row(*r.predicate, row))) continue;
      out.push_back(std::move(row));
    }
    return out;
  }

  std::vector<Row> apply(const PhysicalNode&, const FilterRel& f, Inputs& in) {
    std::vector<Row> out;
    for (auto& row : in[0]) {
      if (truthy(eval_row(*f.condition, row))) out.push_back(std::move(row));
    }
    return out;
  }

  std::vector<Row> apply(const PhysicalNode&, const ProjectRel& p, Inputs& in) {
    std::vector<Row> out;
    out.reserve(in[0].size());
    for (const auto& row : in[0]) {
      Row r;
      for (const auto& e : p.expressions) r.push_back(eval_row(*e, row));
      out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<Row> apply(const PhysicalNode& n, const JoinRel& j, Inputs& in) {
    const auto& left_schema = n.inputs[0]->schema;
    const auto& right_schema = n.inputs[1]->schema;
    auto matches = [&](const Row& l, const Row& r) {
      for (const auto& k : j.keys) {
        const auto& a = l[static_cast<size_t>(k.left)];
        const auto& b = r[static_cast<size_t>(k.right)];
        if (is_null(a) || is_null(b)) return false;
        if (compare_values(a, left_schema[static_cast<size_t>(k.left)].type, b,
                           right_schema[static_cast<size_t>(k.right)].type) != 0) {
          return false;
        }
      }
      return true;
    };
    std::vector<Row> out;
    for (const auto& l : in[0]) {
      bool any = false;
      for (const auto& r : in[1]) {
        if (!matches(l, r)) continue;
        any = true;
        if (j.type == JoinType::kSemi || j.type == JoinType::kAnti) break;
        Row row = l;
        row.insert(row.end(), r.begin(), r.end());
        out.push_back(std::move(row));
      }
      if (j.type == JoinType::kLeft && !any) {
        Row row = l;
        row.resize(l.size() + right_schema.size());
        out.push_back(std::move(row));
      }
      if ((j.type == JoinType::kSemi && any) || (j.type == JoinType::kAnti && !any)) out.push_back(l);
    }
    return out;
  }

  std::vector<Row> apply(const PhysicalNode& n, const AggregateRel& a, Inputs& in) {
    auto fresh = [&] {
      std::vector<AggAccumulator> accs;
      for (const auto& m : a.measures) {
        DataType t = m.arg ? m.arg->type : DataType::int64();
        accs.emplace_back(m.fn, t);
      }
      return accs;
    };
    std::map<Row, std::vector<AggAccumulator>> groups;
    if (a.group_by.empty()) groups.emplace(Row{}, fresh());
    for (const auto& row : in[0]) {
      Row key;
      for (int g : a.group_by) key.push_back(row[static_cast<size_t>(g)]);
      auto it = groups.find(key);
      if (it == groups.end()) it = groups.emplace(std::move(key), fresh()).first;
      for (size_t i = 0; i < a.measures.size(); ++i) {
        const auto& m = a.measures[i];
        auto& acc = it->second[i];
        if (a.phase == AggPhase::kFinal) {
          auto c = static_cast<size_t>(m.arg->column);
          acc.add_partial(row[c], m.fn == AggFn::kAvg ? row[c + 1] : Datum{});
        } else if (!m.arg) {
          acc.add_raw({}, true);
        } else {
          acc.add_raw(eval_row(*m.arg, row));
        }
      }
    }
    std::vector<Row> out;
    for (const auto& [key, accs] : groups) {
      Row row = key;
      for (const auto& acc : accs) {
        if (a.phase == AggPhase::kPartial) {
          auto p = acc.partial();
          row.insert(row.end(), p.begin(), p.end());
        } else {
          row.push_back(acc.finish());
        }
      }
      out.push_back(std::move(row));
    }
    return out;
  }

  std::vector<Row> apply(const PhysicalNode& n, const SortRel& s, Inputs& in) {
    auto rows = std::move(in[0]);
    const auto& schema = n.inputs[0]->schema;
    std::stable_sort(rows.begin(), rows.end(),
                     [&](const Row& a, const Row& b) { return compare_keys(a, b, s.keys, schema) < 0; });
    return rows;
  }

  std::vector<Row> apply(const PhysicalNode&, const LimitRel& l, Inputs& in) {
    auto rows = std::move(in[0]);
    if (rows.size() > static_cast<size_t>(l.count)) rows.resize(static_cast<size_t>(l.count));
    return rows;
  }

  std::vector<Row> apply(const PhysicalNode&, const ExchangeRel&, Inputs& in) { return std::move(in[0]); }

  std::vector<Row> apply(const PhysicalNode&, const ExchangeSourceRel& s, Inputs&) {
    auto it = inputs_.exchange_sources.find(s.exchange_id);
    if (it == inputs_.exchange_sources.end()) {
      raise(ErrorCode::kUnsupportedFeature, "exchange source " + std::to_string(s.exchange_id) + " has no input");
    }
    return to_rows(it->second);
  }

  std::vector<Row> apply(const PhysicalNode&, const UnionAllRel&, Inputs& in) {
    std::vector<Row> out;
    for (auto& part : in) {
      for (auto& r : part) out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<Row> apply(const PhysicalNode&, const DistinctRel&, Inputs& in) {
    std::set<Row> seen;
    std::vector<Row> out;
    for (auto& r : in[0]) {
      if (seen.insert(r).second) out.push_back(std::move(r));
    }
    return out;
  }

  const OracleInputs& inputs_;
};

}  // namespace

Table oracle_execute(const PhysicalNode& root, const OracleInputs& inputs) {
  Runner runner(inputs);
  auto rows = runner.run(root);
  auto types = types_of(root.schema);
  std::vector<Batch> batches;
  if (!rows.empty()) batches.push_back(from_rows(rows, types));
  return Table("result", root.schema, std::move(batches));
}

Table oracle_execute(const PhysicalPlan& p, const OracleInputs& inputs) { return oracle_execute(*p.root, inputs); }

}  // namespace siriette::oracle
