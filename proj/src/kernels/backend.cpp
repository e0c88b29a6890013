#include "siriette/kernels/backend.hpp"

#include <map>
#include <mutex>

namespace siriette::kernels {

namespace {

class Vectorized final : public KernelBackend {
 public:
  std::string name() const override { return "vectorized"; }
  Column eval_expr(const plan::Expr& e, const Batch& b) const override { return kernels::eval_expr(e, b); }
  SelectionVector filter(const Column& predicate) const override { return kernels::filter(predicate); }
  std::shared_ptr<const JoinIndex> join_build(std::vector<Column> keys) const override {
    return std::make_shared<const JoinTable>(std::move(keys));
  }
  JoinResult join_probe(const JoinIndex& index, std::span<const Column> probe_keys, JoinType type,
                        uint64_t narrow_limit) const override {
    const auto* table = dynamic_cast<const JoinTable*>(&index);
    if (!table) raise(ErrorCode::kInternal, "join index built by another backend");
    return kernels::join_probe(*table, probe_keys, type, narrow_limit);
  }
  Batch group_by_hash(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures,
                      AggMode mode) const override {
    return kernels::group_by_hash(b, keys, measures, mode);
  }
  Batch group_by_sort(const Batch& b, std::span<const int> keys, std::span<const AggSpec> measures,
                      AggMode mode) const override {
    return kernels::group_by_sort(b, keys, measures, mode);
  }
  Batch reduce(const Batch& b, std::span<const AggSpec> measures, AggMode mode) const override {
    return kernels::reduce(b, measures, mode);
  }
  SelectionVector sort(const Batch& b, std::span<const SortKey> keys) const override {
    return kernels::sort(b, keys);
  }
};

struct Registry {
  std::mutex mu;
  std::map<std::string, BackendFactory> factories{
      {"vectorized", [] { return vectorized_backend(); }},
  };
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

std::shared_ptr<const KernelBackend> vectorized_backend() {
  static auto backend = std::make_shared<const Vectorized>();
  return backend;
}

void register_backend(const std::string& name, BackendFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[name] = std::move(factory);
}

std::shared_ptr<const KernelBackend> make_backend(const std::string& name) {
  auto& r = registry();
  BackendFactory f;
  {
    std::lock_guard lock(r.mu);
    auto it = r.factories.find(name);
    if (it == r.factories.end()) raise(ErrorCode::kInvalidArgument, "unknown kernel backend '" + name + "'");
    f = it->second;
  }
  return f();
}

std::vector<std::string> backend_names() {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> out;
  for (const auto& [name, f] : r.factories) out.push_back(name);
  return out;
}

}  // namespace siriette::kernels
