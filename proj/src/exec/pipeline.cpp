#include "siriette/exec/pipeline.hpp"

#include <sstream>

#include "siriette/common/error.hpp"

namespace siriette::exec {

using plan::PhysicalNode;
using plan::RelKind;

std::string_view source_kind_name(SourceKind k) {
  switch (k) {
    case SourceKind::kScan: return "scan";
    case SourceKind::kExchange: return "exchange";
    case SourceKind::kBreaker: return "breaker";
  }
  return "?";
}

std::string_view sink_kind_name(SinkKind k) {
  switch (k) {
    case SinkKind::kResult: return "result";
    case SinkKind::kJoinBuild: return "join_build";
    case SinkKind::kAggregate: return "aggregate";
    case SinkKind::kSort: return "sort";
  }
  return "?";
}

namespace {

class Builder {
 public:
  explicit Builder(PipelineDag& dag) : dag_(dag) {}

  // Returns the open pipeline whose chain currently ends with n's output.
  int open(const PhysicalNode* n) {
    switch (n->kind()) {
      case RelKind::kRead: return fresh(SourceKind::kScan, n);
      case RelKind::kExchangeSource: return fresh(SourceKind::kExchange, n);
      case RelKind::kFilter:
      case RelKind::kProject:
      case RelKind::kLimit:
      case RelKind::kExchange: {
        int p = open(n->inputs[0].get());
        dag_.pipelines[static_cast<size_t>(p)].ops.push_back(n);
        return p;
      }
      case RelKind::kHashJoin: {
        int build = open(n->inputs[1].get());
        close(build, SinkKind::kJoinBuild, n);
        int probe = open(n->inputs[0].get());
        auto& p = dag_.pipelines[static_cast<size_t>(probe)];
        p.ops.push_back(n);
        p.deps.push_back(build);
        return probe;
      }
      case RelKind::kAggregate:
      case RelKind::kSort: {
        int child = open(n->inputs[0].get());
        close(child, n->kind() == RelKind::kSort ? SinkKind::kSort : SinkKind::kAggregate, n);
        int next = fresh(SourceKind::kBreaker, n);
        dag_.pipelines[static_cast<size_t>(next)].deps.push_back(child);
        return next;
      }
      case RelKind::kUnionAll:
      case RelKind::kDistinct:
        raise(ErrorCode::kUnsupportedFeature,
              "relation '" + std::string(plan::rel_kind_name(n->kind())) + "' has no native operator");
    }
    raise(ErrorCode::kInternal, "unhandled relation in pipeline builder");
  }

  void close(int p, SinkKind kind, const PhysicalNode* sink) {
    auto& pl = dag_.pipelines[static_cast<size_t>(p)];
    pl.sink_kind = kind;
    pl.sink = sink;
  }

 private:
  int fresh(SourceKind kind, const PhysicalNode* source) {
    Pipeline p;
    p.id = static_cast<int>(dag_.pipelines.size());
    p.source_kind = kind;
    p.source = source;
    dag_.pipelines.push_back(std::move(p));
    return dag_.pipelines.back().id;
  }

  PipelineDag& dag_;
};

}  // namespace

PipelineDag build_pipelines(const plan::PhysicalPtr& root) {
  PipelineDag dag;
  dag.root = root;
  Builder b(dag);
  int last = b.open(root.get());
  b.close(last, SinkKind::kResult, nullptr);
  return dag;
}

std::string PipelineDag::to_string() const {
  std::ostringstream out;
  for (const auto& p : pipelines) {
    out << "pipeline " << p.id << ": " << source_kind_name(p.source_kind) << "("
        << plan::rel_kind_name(p.source->kind()) << "#" << p.source->id << ")";
    for (const auto* op : p.ops) out << " -> " << plan::rel_kind_name(op->kind()) << "#" << op->id;
    out << " => " << sink_kind_name(p.sink_kind);
    if (p.sink) out << "(#" << p.sink->id << ")";
    if (!p.deps.empty()) {
      out << " after";
      for (int d : p.deps) out << " " << d;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace siriette::exec
