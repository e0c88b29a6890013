#include "siriette/plan/fragments.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "siriette/common/error.hpp"

namespace siriette::plan {

const ExchangeEdge& FragmentSet::edge(uint32_t id) const {
  for (const auto& e : edges) {
    if (e.id == id) return e;
  }
  raise(ErrorCode::kUnknownEntry, "no exchange edge " + std::to_string(id));
}

namespace {

class Splitter {
 public:
  FragmentSet run(const PhysicalPtr& root) {
    Fragment top;
    top.root = cut(root, top);
    top.id = static_cast<int>(set_.fragments.size());
    set_.fragments.push_back(std::move(top));
    for (auto& e : set_.edges) {
      for (const auto& f : set_.fragments) {
        if (std::find(f.input_exchanges.begin(), f.input_exchanges.end(), e.id) != f.input_exchanges.end()) {
          e.consumer = f.id;
        }
      }
    }
    return std::move(set_);
  }

 private:
  // Returns `node` with every exchange below it replaced by an exchange_source.
  PhysicalPtr cut(const PhysicalPtr& node, Fragment& owner) {
    if (node->kind() == RelKind::kExchange) {
      const auto& ex = node->as<ExchangeRel>();
      uint32_t id = static_cast<uint32_t>(node->id);

      Fragment producer;
      producer.root = cut(node->inputs[0], producer);
      producer.output_exchange = id;
      producer.id = static_cast<int>(set_.fragments.size());
      int producer_id = producer.id;
      set_.fragments.push_back(std::move(producer));

      ExchangeEdge edge;
      edge.id = id;
      edge.pattern = ex.pattern;
      edge.producer = producer_id;
      edge.keys = ex.keys;
      edge.targets = ex.targets;
      edge.schema = node->schema;
      if (ex.pattern == ExchangePattern::kMerge) edge.merge_keys = node->inputs[0]->as<SortRel>().keys;
      set_.edges.push_back(edge);
      owner.input_exchanges.push_back(id);

      auto source = std::make_shared<PhysicalNode>();
      source->id = node->id;
      source->rel = ExchangeSourceRel{id, ex.pattern, node->schema, edge.merge_keys};
      source->schema = node->schema;
      return source;
    }
    bool changed = false;
    std::vector<PhysicalPtr> inputs;
    for (const auto& in : node->inputs) {
      inputs.push_back(cut(in, owner));
      changed = changed || inputs.back() != in;
    }
    if (!changed) return node;
    auto copy = std::make_shared<PhysicalNode>(*node);
    copy->inputs = std::move(inputs);
    return copy;
  }

  FragmentSet set_;
};

}  // namespace

FragmentSet split_fragments(const PhysicalPlan& plan) {
  return Splitter().run(plan.root);
}

PhysicalPtr reassemble(const FragmentSet& set) {
  std::map<uint32_t, const Fragment*> producer_of;
  for (const auto& f : set.fragments) {
    if (f.output_exchange) producer_of[*f.output_exchange] = &f;
  }
  std::function<PhysicalPtr(const PhysicalPtr&)> inline_node = [&](const PhysicalPtr& node) -> PhysicalPtr {
    if (node->kind() == RelKind::kExchangeSource) {
      const auto& src = node->as<ExchangeSourceRel>();
      const auto& edge = set.edge(src.exchange_id);
      auto ex = std::make_shared<PhysicalNode>();
      ex->id = node->id;
      ex->rel = ExchangeRel{edge.pattern, edge.keys, edge.targets};
      ex->schema = edge.schema;
      ex->inputs.push_back(inline_node(producer_of.at(src.exchange_id)->root));
      return ex;
    }
    auto copy = std::make_shared<PhysicalNode>(*node);
    for (auto& in : copy->inputs) in = inline_node(in);
    return copy;
  };
  return inline_node(set.root().root);
}

}  // namespace siriette::plan
