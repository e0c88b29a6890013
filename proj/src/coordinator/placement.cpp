#include "siriette/coordinator/placement.hpp"

#include <algorithm>

namespace siriette::coordinator {

const std::vector<NodeId>& Placement::of(int fragment) const {
  auto it = nodes.find(fragment);
  if (it == nodes.end()) raise(ErrorCode::kUnknownEntry, "no placement for fragment " + std::to_string(fragment));
  return it->second;
}

bool Placement::runs(int fragment, NodeId node) const {
  const auto& ns = of(fragment);
  return std::binary_search(ns.begin(), ns.end(), node);
}

Placement place_fragments(const plan::FragmentSet& set, const std::vector<NodeId>& participants, NodeId coordinator) {
  std::vector<NodeId> all = participants;
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  if (!std::binary_search(all.begin(), all.end(), coordinator)) {
    raise(ErrorCode::kInvalidArgument, "coordinator " + std::to_string(coordinator) + " is not a participant");
  }

  Placement p;
  for (const auto& f : set.fragments) {
    std::vector<NodeId> nodes = all;
    for (uint32_t e : f.input_exchanges) {
      const auto& edge = set.edge(e);
      std::vector<NodeId> allowed;
      if (edge.pattern == plan::ExchangePattern::kMerge) {
        allowed = {coordinator};
      } else if (edge.pattern == plan::ExchangePattern::kMulticast) {
        for (int t : edge.targets) {
          if (t >= 0 && std::binary_search(all.begin(), all.end(), static_cast<NodeId>(t))) {
            allowed.push_back(static_cast<NodeId>(t));
          }
        }
        std::sort(allowed.begin(), allowed.end());
        allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
        if (allowed.empty()) {
          raise(ErrorCode::kNodeLost, "no alive target for multicast exchange " + std::to_string(e));
        }
      } else {
        continue;
      }
      std::vector<NodeId> kept;
      std::set_intersection(nodes.begin(), nodes.end(), allowed.begin(), allowed.end(), std::back_inserter(kept));
      nodes = std::move(kept);
    }
    if (nodes.empty()) {
      raise(ErrorCode::kUnsupportedFeature,
            "fragment " + std::to_string(f.id) + " has conflicting placement constraints");
    }
    p.nodes[f.id] = std::move(nodes);
  }
  return p;
}

}  // namespace siriette::coordinator
