#pragma once

#include <functional>
#include <map>
#include <string>

#include "siriette/columnar/batch.hpp"
#include "siriette/plan/plan.hpp"

namespace siriette::oracle {

// Resolves a base table by name; raises MissingTable when absent.
using TableLookup = std::function<const Table&(const std::string&)>;

struct OracleInputs {
  TableLookup tables;
  // Received exchange data for fragment plans, keyed by exchange id.
  std::map<uint32_t, Table> exchange_sources;
};

// Tuple-at-a-time execution: nested-loop joins, sorted-map group-by,
// comparison sort. Exchange nodes pass their input through unchanged.
Table oracle_execute(const plan::PhysicalPlan& p, const OracleInputs& inputs);
Table oracle_execute(const plan::PhysicalNode& root, const OracleInputs& inputs);

}  // namespace siriette::oracle
