#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <thread>
#include <vector>

#include "siriette/buffer/buffer_manager.hpp"
#include "siriette/columnar/batch.hpp"
#include "siriette/exchange/frame.hpp"
#include "siriette/exchange/transport.hpp"
#include "siriette/plan/plan.hpp"

namespace siriette::exchange {

// Row r goes to output hash(keys(r)) mod n. Outputs may be empty.
std::vector<Batch> partition_batch(const Batch& b, std::span<const int> keys, size_t n);

// k-way merge of individually sorted runs; ties keep run order.
Batch merge_sorted(std::span<const Batch> runs, std::span<const plan::SortKey> keys);

enum class ReceiveMode { kCollect, kMerge };

struct ReceiveSpec {
  ReceiveMode mode = ReceiveMode::kCollect;
  std::vector<plan::SortKey> merge_keys;
  Schema schema;
};

// Received exchange intermediates per (query id, exchange id). Entries appear
// on the first frame and vanish when their last consumer deregisters. Frame
// payloads are charged to the processing region.
class TempTableRegistry {
 public:
  explicit TempTableRegistry(buffer::BufferManager* buffers = nullptr);
  ~TempTableRegistry();

  // Out-of-sequence frames poison the entry with SequenceGap.
  void accept(const Frame& f);

  // Blocks until every producer ended its stream, then returns the assembled
  // table (collect: producer then sequence order; merge: k-way merge) and
  // registers `consumer` on the entry.
  Table receive(uint64_t query, uint32_t exchange, const std::set<NodeId>& producers, const ReceiveSpec& spec,
                int consumer, Millis timeout);

  // Drops `consumer`; the entry and its bytes go with the last one.
  // UnknownEntry when the entry or consumer is absent.
  void deregister(uint64_t query, uint32_t exchange, int consumer);

  // Fails pending and future receives of `query` with `code`.
  void abort(uint64_t query, ErrorCode code, const std::string& message);
  void drop_query(uint64_t query);

  bool contains(uint64_t query, uint32_t exchange) const;
  size_t size() const;
  // Received batches of one entry in (producer, sequence) order.
  std::vector<Batch> snapshot(uint64_t query, uint32_t exchange) const;

 private:
  struct Stream {
    uint32_t next = 0;
    bool ended = false;
    std::vector<Batch> batches;
  };
  struct Entry {
    std::map<NodeId, Stream> streams;
    std::optional<Table> table;
    std::set<int> consumers;
    std::optional<std::pair<ErrorCode, std::string>> error;
    std::vector<buffer::Reservation> reservations;
  };
  using Key = std::pair<uint64_t, uint32_t>;

  buffer::BufferManager* buffers_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<Key, Entry> entries_;
  std::map<uint64_t, std::pair<ErrorCode, std::string>> aborted_;
};

struct ExchangeOptions {
  size_t window = 8;  // in-flight frames per stream
  Millis backpressure_timeout{10000};
};

struct SendSpec {
  uint64_t query = 0;
  uint32_t exchange = 0;
  plan::ExchangePattern pattern = plan::ExchangePattern::kBroadcast;
  // Receiving nodes; shuffle partition i goes to targets[i].
  std::vector<NodeId> targets;
  std::vector<int> keys;  // shuffle
};

// Per-node exchange endpoint. A receiver thread drains the transport into the
// registry and returns credits; other messages queue as control traffic.
class ExchangeService {
 public:
  ExchangeService(std::shared_ptr<Transport> transport, buffer::BufferManager* buffers, ExchangeOptions options = {});
  ~ExchangeService();
  ExchangeService(const ExchangeService&) = delete;
  ExchangeService& operator=(const ExchangeService&) = delete;

  NodeId self() const { return transport_->self(); }
  Transport& transport() { return *transport_; }
  TempTableRegistry& registry() { return registry_; }

  // Sends every batch per the pattern and ends each target's stream.
  // TransportError, BackpressureTimeout.
  void send(const SendSpec& spec, std::span<const Batch> batches);

  void send_control(NodeId to, std::span<const uint8_t> bytes);
  std::optional<Message> next_control(Millis timeout);

  uint64_t frames_sent() const { return frames_sent_; }
  uint64_t bytes_sent() const { return bytes_sent_; }

  void stop();

 private:
  struct StreamKey {
    uint64_t query;
    uint32_t exchange;
    NodeId peer;
    auto operator<=>(const StreamKey&) const = default;
  };

  void receive_loop();
  void send_frame(const StreamKey& key, const Frame& f);
  void grant(NodeId to, const FrameHeader& h);

  std::shared_ptr<Transport> transport_;
  TempTableRegistry registry_;
  ExchangeOptions options_;
  Mailbox control_;

  std::mutex credit_mu_;
  std::condition_variable credit_cv_;
  std::map<StreamKey, size_t> in_flight_;

  std::atomic<uint64_t> frames_sent_{0};
  std::atomic<uint64_t> bytes_sent_{0};
  std::atomic<bool> stopping_{false};
  std::thread receiver_;
};

}  // namespace siriette::exchange
