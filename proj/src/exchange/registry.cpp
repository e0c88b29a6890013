#include "siriette/columnar/serialize.hpp"
#include "siriette/common/error.hpp"
#include "siriette/exchange/exchange.hpp"

namespace siriette::exchange {

TempTableRegistry::TempTableRegistry(buffer::BufferManager* buffers) : buffers_(buffers) {}

TempTableRegistry::~TempTableRegistry() = default;

void TempTableRegistry::accept(const Frame& f) {
  const auto& h = f.header;
  std::optional<Batch> batch;
  if (!h.end_of_stream()) batch = deserialize_batch(f.payload);

  std::lock_guard lock(mu_);
  if (aborted_.contains(h.query_id)) return;
  auto& e = entries_[{h.query_id, h.exchange_id}];
  if (e.error) return;
  auto& s = e.streams[h.producer];
  if (s.ended || h.sequence != s.next) {
    e.error = {ErrorCode::kSequenceGap, "exchange " + std::to_string(h.exchange_id) + " from node " +
                                            std::to_string(h.producer) + ": expected sequence " +
                                            std::to_string(s.next) + ", got " + std::to_string(h.sequence)};
    cv_.notify_all();
    return;
  }
  ++s.next;
  if (h.end_of_stream()) {
    s.ended = true;
    cv_.notify_all();
    return;
  }
  if (buffers_ && batch->byte_size() > 0) {
    try {
      e.reservations.push_back(buffers_->reserve(buffer::RegionKind::kProcessing, batch->byte_size(),
                                                 "exchange " + std::to_string(h.exchange_id)));
    } catch (const Error& err) {
      e.error = {err.code(), err.what()};
      cv_.notify_all();
      return;
    }
  }
  s.batches.push_back(std::move(*batch));
}

Table TempTableRegistry::receive(uint64_t query, uint32_t exchange, const std::set<NodeId>& producers,
                                 const ReceiveSpec& spec, int consumer, Millis timeout) {
  std::unique_lock lock(mu_);
  Key key{query, exchange};
  auto ready = [&] {
    if (aborted_.contains(query)) return true;
    auto it = entries_.find(key);
    if (it == entries_.end()) return producers.empty();
    const auto& e = it->second;
    if (e.error || e.table) return true;
    for (NodeId p : producers) {
      auto s = e.streams.find(p);
      if (s == e.streams.end() || !s->second.ended) return false;
    }
    return true;
  };
  if (!cv_.wait_for(lock, timeout, ready)) {
    raise(ErrorCode::kTransportError, "timed out waiting for exchange " + std::to_string(exchange));
  }
  if (auto a = aborted_.find(query); a != aborted_.end()) raise(a->second.first, a->second.second);
  auto& e = entries_[key];
  if (e.error) raise(e.error->first, e.error->second);

  if (!e.table) {
    auto types = types_of(spec.schema);
    std::vector<Batch> runs;
    std::vector<Batch> flat;
    for (auto& [producer, s] : e.streams) {
      if (!producers.contains(producer)) continue;
      if (spec.mode == ReceiveMode::kMerge) {
        runs.push_back(s.batches.empty() ? Batch::empty(types) : concat_batches(s.batches));
      } else {
        for (auto& b : s.batches) {
          if (b.num_rows() > 0) flat.push_back(std::move(b));
        }
      }
      s.batches.clear();
    }
    std::vector<Batch> batches;
    if (spec.mode == ReceiveMode::kMerge) {
      if (!runs.empty()) batches.push_back(merge_sorted(runs, spec.merge_keys));
    } else {
      batches = std::move(flat);
    }
    e.table = Table("exchange_" + std::to_string(exchange), spec.schema, std::move(batches));
  }
  e.consumers.insert(consumer);
  return *e.table;
}

void TempTableRegistry::deregister(uint64_t query, uint32_t exchange, int consumer) {
  std::vector<buffer::Reservation> released;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find({query, exchange});
    if (it == entries_.end() || !it->second.consumers.contains(consumer)) {
      raise(ErrorCode::kUnknownEntry, "no registry entry for query " + std::to_string(query) + ", exchange " +
                                          std::to_string(exchange) + ", consumer " + std::to_string(consumer));
    }
    it->second.consumers.erase(consumer);
    if (it->second.consumers.empty()) {
      released = std::move(it->second.reservations);
      entries_.erase(it);
    }
  }
}

void TempTableRegistry::abort(uint64_t query, ErrorCode code, const std::string& message) {
  std::lock_guard lock(mu_);
  aborted_[query] = {code, message};
  cv_.notify_all();
}

void TempTableRegistry::drop_query(uint64_t query) {
  std::vector<Entry> dropped;
  std::lock_guard lock(mu_);
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->first.first == query) {
      dropped.push_back(std::move(it->second));
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
  aborted_.erase(query);
}

bool TempTableRegistry::contains(uint64_t query, uint32_t exchange) const {
  std::lock_guard lock(mu_);
  return entries_.contains({query, exchange});
}

size_t TempTableRegistry::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<Batch> TempTableRegistry::snapshot(uint64_t query, uint32_t exchange) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({query, exchange});
  if (it == entries_.end()) return {};
  if (it->second.table) return it->second.table->batches();
  std::vector<Batch> out;
  for (const auto& [p, s] : it->second.streams) out.insert(out.end(), s.batches.begin(), s.batches.end());
  return out;
}

}  // namespace siriette::exchange
