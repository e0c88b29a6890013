#pragma once

#include <optional>

#include "siriette/plan/plan.hpp"

namespace siriette::plan {

struct ValidateOptions {
  // Forces the group-by strategy; by default sort is chosen when any group key
  // is a STRING and hash otherwise.
  std::optional<GroupStrategy> groupby_override;
};

// Resolves types and schemas, assigns post-order node ids and picks per-node
// physical strategies. Deterministic for identical inputs.
PhysicalPlan validate_plan(const PlanGraph& graph, const Catalog& catalog, const ValidateOptions& options = {});

// Resolves one expression against an input schema (exposed for tests).
ExprPtr resolve_expr(const ExprPtr& expr, const Schema& input);

// Output type of an aggregate over `input` in the finished (single/final) layout.
DataType aggregate_result_type(AggFn fn, const DataType& input);
// Accumulator column types a partial aggregate emits for one measure.
std::vector<DataType> partial_accumulator_types(AggFn fn, const DataType& input);

}  // namespace siriette::plan
