#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "siriette/plan/plan.hpp"

namespace siriette::plan {

// Exchange id of the implicit gather that carries root-fragment output to the
// coordinator.
inline constexpr uint32_t kResultExchangeId = 0xFFFFFFFFu;

struct Fragment {
  int id = 0;
  // Exchange-free subtree; cut inputs appear as exchange_source leaves.
  PhysicalPtr root;
  std::vector<uint32_t> input_exchanges;
  std::optional<uint32_t> output_exchange;  // absent for the root fragment
};

struct ExchangeEdge {
  uint32_t id = 0;  // node id of the exchange in the full plan
  ExchangePattern pattern = ExchangePattern::kBroadcast;
  int producer = 0;
  int consumer = 0;
  std::vector<int> keys;
  std::vector<int> targets;
  std::vector<SortKey> merge_keys;
  Schema schema;
};

struct FragmentSet {
  // Producers precede consumers; the root fragment is last.
  std::vector<Fragment> fragments;
  std::vector<ExchangeEdge> edges;

  const Fragment& root() const { return fragments.back(); }
  const ExchangeEdge& edge(uint32_t id) const;
};

FragmentSet split_fragments(const PhysicalPlan& plan);

// Inlines every fragment back at its exchange edge.
PhysicalPtr reassemble(const FragmentSet& set);

}  // namespace siriette::plan
