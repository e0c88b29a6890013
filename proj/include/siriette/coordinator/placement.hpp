#pragma once

#include <map>
#include <vector>

#include "siriette/coordinator/protocol.hpp"
#include "siriette/plan/fragments.hpp"

namespace siriette::coordinator {

// Nodes instantiating each fragment. Every fragment runs on every participating
// node, except consumers of a merge edge (coordinator only) and consumers of a
// multicast edge (its targets among the participants).
struct Placement {
  std::map<int, std::vector<NodeId>> nodes;  // fragment id -> sorted node ids

  const std::vector<NodeId>& of(int fragment) const;
  bool runs(int fragment, NodeId node) const;
};

// Deterministic in its inputs, so every node derives the same placement.
// NodeLost when a multicast consumer has no participating target;
// UnsupportedFeature when constraints leave a fragment without nodes.
Placement place_fragments(const plan::FragmentSet& set, const std::vector<NodeId>& participants, NodeId coordinator);

}  // namespace siriette::coordinator
