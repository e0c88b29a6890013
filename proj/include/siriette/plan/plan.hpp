#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "siriette/common/types.hpp"
#include "siriette/plan/expr.hpp"

namespace siriette::plan {

enum class JoinType { kInner, kLeft, kSemi, kAnti };
enum class AggFn { kSum, kCount, kMin, kMax, kAvg };
enum class AggPhase { kSingle, kPartial, kFinal };
enum class ExchangePattern { kBroadcast, kShuffle, kMerge, kMulticast };
enum class GroupStrategy { kHash, kSort };

struct SortKey {
  int column = 0;
  bool ascending = true;
  bool nulls_first = false;

  friend bool operator==(const SortKey&, const SortKey&) = default;
};

struct JoinKey {
  int left = 0;
  int right = 0;

  friend bool operator==(const JoinKey&, const JoinKey&) = default;
};

struct Measure {
  AggFn fn = AggFn::kCount;
  ExprPtr arg;  // null means count(*)
  std::string name;
};

struct ReadRel {
  std::string table;
  std::vector<int> columns;
  ExprPtr predicate;  // pushed-down, over the projected columns
};
struct FilterRel {
  ExprPtr condition;
};
struct ProjectRel {
  std::vector<ExprPtr> expressions;
  std::vector<std::string> names;
};
// Left input probes, right input is the build side.
struct JoinRel {
  JoinType type = JoinType::kInner;
  std::vector<JoinKey> keys;
};
struct AggregateRel {
  std::vector<int> group_by;
  std::vector<Measure> measures;
  AggPhase phase = AggPhase::kSingle;
};
struct SortRel {
  std::vector<SortKey> keys;
};
struct LimitRel {
  int64_t count = 0;
};
struct ExchangeRel {
  ExchangePattern pattern = ExchangePattern::kBroadcast;
  std::vector<int> keys;     // shuffle
  std::vector<int> targets;  // multicast
};
// Leaf standing in for the receiving end of an exchange inside a fragment.
struct ExchangeSourceRel {
  uint32_t exchange_id = 0;
  ExchangePattern pattern = ExchangePattern::kBroadcast;
  Schema schema;
  std::vector<SortKey> merge_keys;
};
// Relations understood only by the reference executor.
struct UnionAllRel {};
struct DistinctRel {};

using Rel = std::variant<ReadRel, FilterRel, ProjectRel, JoinRel, AggregateRel, SortRel, LimitRel, ExchangeRel,
                         ExchangeSourceRel, UnionAllRel, DistinctRel>;

// Order matches the Rel alternatives.
enum class RelKind {
  kRead,
  kFilter,
  kProject,
  kHashJoin,
  kAggregate,
  kSort,
  kLimit,
  kExchange,
  kExchangeSource,
  kUnionAll,
  kDistinct,
};

std::string_view rel_kind_name(RelKind kind);
std::optional<RelKind> rel_kind_from_name(std::string_view name);
std::string_view join_type_name(JoinType t);
std::string_view agg_fn_name(AggFn f);
std::string_view agg_phase_name(AggPhase p);
std::string_view pattern_name(ExchangePattern p);

struct RelNode;
using RelPtr = std::shared_ptr<const RelNode>;

struct RelNode {
  Rel rel;
  std::vector<RelPtr> inputs;

  RelKind kind() const { return static_cast<RelKind>(rel.index()); }
};

struct PlanGraph {
  std::string catalog_ref;
  RelPtr root;
};

bool structurally_equal(const RelNode& a, const RelNode& b);

struct TableDef {
  std::string name;
  Schema schema;
};

class Catalog {
 public:
  void add(TableDef table);
  const TableDef* find(const std::string& name) const;
  const TableDef& at(const std::string& name) const;  // MissingTable when absent
  void remove(const std::string& name) { tables_.erase(name); }
  bool contains(const std::string& name) const { return tables_.contains(name); }
  const std::map<std::string, TableDef>& tables() const { return tables_; }

 private:
  std::map<std::string, TableDef> tables_;
};

struct PhysicalNode;
using PhysicalPtr = std::shared_ptr<const PhysicalNode>;

enum class BuildSide { kRight };

struct PhysicalNode {
  int id = 0;
  Rel rel;  // expressions carry resolved types
  std::vector<PhysicalPtr> inputs;
  Schema schema;
  GroupStrategy strategy = GroupStrategy::kHash;  // aggregates only
  BuildSide build_side = BuildSide::kRight;       // joins only

  RelKind kind() const { return static_cast<RelKind>(rel.index()); }
  template <class R>
  const R& as() const {
    return std::get<R>(rel);
  }
};

struct PhysicalPlan {
  std::string catalog_ref;
  PhysicalPtr root;
  // Every node, children before parents; nodes[i]->id == i.
  std::vector<const PhysicalNode*> nodes;
};

// Rebuilds the node list of a physical tree in post-order.
std::vector<const PhysicalNode*> collect_nodes(const PhysicalPtr& root);

// Same shape, ids, relations and schemas.
bool physically_equal(const PhysicalNode& a, const PhysicalNode& b);

bool contains_kind(const PhysicalPtr& root, RelKind kind);

}  // namespace siriette::plan
