#include "siriette/common/bytes.hpp"
#include "siriette/common/error.hpp"
#include "siriette/common/log.hpp"
#include "siriette/exchange/exchange.hpp"

namespace siriette::exchange {

namespace {

constexpr std::array<uint8_t, 4> kCreditMagic{'S', 'R', 'X', 'C'};

bool has_magic(std::span<const uint8_t> m, const std::array<uint8_t, 4>& magic) {
  return m.size() >= magic.size() && std::equal(magic.begin(), magic.end(), m.begin());
}

}  // namespace

ExchangeService::ExchangeService(std::shared_ptr<Transport> transport, buffer::BufferManager* buffers,
                                 ExchangeOptions options)
    : transport_(std::move(transport)), registry_(buffers), options_(options) {
  if (options_.window == 0) options_.window = 1;
  receiver_ = std::thread([this] { receive_loop(); });
}

ExchangeService::~ExchangeService() { stop(); }

void ExchangeService::stop() {
  if (stopping_.exchange(true)) return;
  if (receiver_.joinable()) receiver_.join();
  control_.close();
  credit_cv_.notify_all();
}

void ExchangeService::grant(NodeId to, const FrameHeader& h) {
  std::vector<uint8_t> msg;
  ByteWriter w(msg);
  w.put_bytes(kCreditMagic.data(), kCreditMagic.size());
  w.put(h.query_id);
  w.put(h.exchange_id);
  try {
    transport_->send(to, msg);
  } catch (const Error& e) {
    spdlog::debug("credit to node {} not delivered: {}", to, e.what());
  }
}

void ExchangeService::receive_loop() {
  while (!stopping_) {
    auto m = transport_->receive(Millis(50));
    if (!m) continue;
    if (is_frame(m->bytes)) {
      try {
        auto f = decode_frame(m->bytes);
        registry_.accept(f);
        grant(m->from, f.header);
      } catch (const Error& e) {
        spdlog::warn("node {}: dropped malformed frame from node {}: {}", self(), m->from, e.what());
      }
    } else if (has_magic(m->bytes, kCreditMagic)) {
      ByteReader r(std::span<const uint8_t>(m->bytes).subspan(kCreditMagic.size()));
      StreamKey key{r.get<uint64_t>(), r.get<uint32_t>(), m->from};
      std::lock_guard lock(credit_mu_);
      auto it = in_flight_.find(key);
      if (it != in_flight_.end() && it->second > 0) --it->second;
      credit_cv_.notify_all();
    } else {
      control_.push(std::move(*m));
    }
  }
}

void ExchangeService::send_frame(const StreamKey& key, const Frame& f) {
  auto bytes = encode_frame(f);
  if (key.peer == self()) {
    // Local delivery skips the transport and its credit round trip.
    registry_.accept(f);
  } else {
    {
      std::unique_lock lock(credit_mu_);
      auto& n = in_flight_[key];
      if (!credit_cv_.wait_for(lock, options_.backpressure_timeout,
                               [&] { return n < options_.window || stopping_; })) {
        raise(ErrorCode::kBackpressureTimeout, "no credit from node " + std::to_string(key.peer) + " for exchange " +
                                                   std::to_string(key.exchange));
      }
      if (stopping_) raise(ErrorCode::kTransportError, "exchange service stopped");
      ++n;
    }
    transport_->send(key.peer, bytes);
  }
  ++frames_sent_;
  bytes_sent_ += bytes.size();
}

void ExchangeService::send(const SendSpec& spec, std::span<const Batch> batches) {
  if (spec.targets.empty()) raise(ErrorCode::kInvalidArgument, "exchange without targets");
  std::vector<uint32_t> seq(spec.targets.size(), 0);
  auto emit = [&](size_t t, const Batch& b) {
    StreamKey key{spec.query, spec.exchange, spec.targets[t]};
    send_frame(key, data_frame(spec.query, spec.exchange, self(), spec.targets[t], seq[t]++, b));
  };
  for (const auto& b : batches) {
    if (b.num_rows() == 0) continue;
    if (spec.pattern == plan::ExchangePattern::kShuffle) {
      auto parts = partition_batch(b, spec.keys, spec.targets.size());
      for (size_t t = 0; t < parts.size(); ++t) {
        if (parts[t].num_rows() > 0) emit(t, parts[t]);
      }
    } else {
      for (size_t t = 0; t < spec.targets.size(); ++t) emit(t, b);
    }
  }
  for (size_t t = 0; t < spec.targets.size(); ++t) {
    StreamKey key{spec.query, spec.exchange, spec.targets[t]};
    send_frame(key, end_frame(spec.query, spec.exchange, self(), spec.targets[t], seq[t]++));
  }
  // Stream accounting is per query; drop finished counters.
  std::lock_guard lock(credit_mu_);
  for (NodeId t : spec.targets) {
    auto it = in_flight_.find({spec.query, spec.exchange, t});
    if (it != in_flight_.end() && it->second == 0) in_flight_.erase(it);
  }
}

void ExchangeService::send_control(NodeId to, std::span<const uint8_t> bytes) {
  if (is_frame(bytes) || has_magic(bytes, kCreditMagic)) {
    raise(ErrorCode::kInvalidArgument, "control message collides with an exchange magic");
  }
  transport_->send(to, bytes);
}

std::optional<Message> ExchangeService::next_control(Millis timeout) { return control_.pop(timeout); }

}  // namespace siriette::exchange
