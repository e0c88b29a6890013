#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "siriette/kernels/kernels.hpp"

namespace siriette::kernels {

// The operator surface the executor drives. One backend is active per engine.
class KernelBackend {
 public:
  virtual ~KernelBackend() = default;
  virtual std::string name() const = 0;

  virtual Column eval_expr(const plan::Expr& e, const Batch& b) const = 0;
  virtual SelectionVector filter(const Column& predicate) const = 0;
  virtual std::shared_ptr<const JoinIndex> join_build(std::vector<Column> keys) const = 0;
  virtual JoinResult join_probe(const JoinIndex& index, std::span<const Column> probe_keys, JoinType type,
                                uint64_t narrow_limit) const = 0;
  virtual Batch group_by_hash(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures,
                              AggMode mode) const = 0;
  virtual Batch group_by_sort(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures,
                              AggMode mode) const = 0;
  virtual Batch reduce(const Batch& b, std::span<const AggSpec> measures, AggMode mode) const = 0;
  virtual SelectionVector sort(const Batch& b, std::span<const SortKey> keys) const = 0;
};

using BackendFactory = std::function<std::shared_ptr<const KernelBackend>()>;

// Process-wide registry keyed by backend name. "vectorized" is always present.
void register_backend(const std::string& name, BackendFactory factory);
std::shared_ptr<const KernelBackend> make_backend(const std::string& name);
std::vector<std::string> backend_names();

std::shared_ptr<const KernelBackend> vectorized_backend();

}  // namespace siriette::kernels
