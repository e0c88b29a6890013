#pragma once

#include <string>
#include <vector>

#include "siriette/plan/plan.hpp"

namespace siriette::exec {

enum class SourceKind { kScan, kExchange, kBreaker };
enum class SinkKind { kResult, kJoinBuild, kAggregate, kSort };

std::string_view source_kind_name(SourceKind k);
std::string_view sink_kind_name(SinkKind k);

struct Pipeline {
  int id = 0;
  SourceKind source_kind = SourceKind::kScan;
  // Read, exchange_source, or the breaker (aggregate/sort) whose result is replayed.
  const plan::PhysicalNode* source = nullptr;
  // Streaming operators in push order: filter, project, join probe, limit, exchange.
  std::vector<const plan::PhysicalNode*> ops;
  SinkKind sink_kind = SinkKind::kResult;
  const plan::PhysicalNode* sink = nullptr;  // join, aggregate or sort node
  // Pipelines whose sinks must be sealed before this one gets tasks.
  std::vector<int> deps;
};

struct PipelineDag {
  plan::PhysicalPtr root;
  // Topologically ordered: every dependency has a smaller id.
  std::vector<Pipeline> pipelines;

  std::string to_string() const;
};

// Cuts at join build sides, aggregates and sorts. Exchange nodes stay in the
// chain as pass-throughs; union_all/distinct raise UnsupportedFeature.
PipelineDag build_pipelines(const plan::PhysicalPtr& root);

}  // namespace siriette::exec
