#pragma once

#include <set>
#include <string>
#include <string_view>

#include "siriette/plan/plan.hpp"

namespace siriette::plan {

using RelationSet = std::set<RelKind>;

// Relations the vectorized engine executes (exchange_source included, since
// fragments are shipped as documents).
const RelationSet& native_relations();
// Everything the grammar knows, including reference-executor-only relations.
const RelationSet& all_relations();

// Parses a plan document (see docs/plan-format.md). Node kinds outside
// `accepted` raise UnknownRelation; unknown expression operators or aggregate
// functions raise UnknownFunction; anything else malformed raises SyntaxError.
PlanGraph parse_plan(std::string_view document, const RelationSet& accepted = native_relations());

// Canonical rendering; parse_plan(print_plan(g)) is structurally equal to g.
std::string print_plan(const PlanGraph& graph, bool pretty = true);

// Renders a physical subtree as a plan document (used to ship fragments).
std::string print_physical(const PhysicalNode& root, const std::string& catalog_ref, bool pretty = false);

std::string print_expr(const Expr& expr);

}  // namespace siriette::plan
