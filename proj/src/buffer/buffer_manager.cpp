#include "siriette/buffer/buffer_manager.hpp"

#include <algorithm>

#include "siriette/common/error.hpp"
#include "siriette/common/log.hpp"

namespace siriette::buffer {

std::string_view region_name(RegionKind kind) { return kind == RegionKind::kCaching ? "caching" : "processing"; }

BufferConfig BufferConfig::split(uint64_t total) { return {total / 2, total - total / 2}; }

struct Reservation::State {
  std::mutex mu;
  RegionStats regions[2];
  uint64_t exhaustion_events = 0;
  uint64_t ingestions = 0;

  RegionStats& region(RegionKind k) { return regions[k == RegionKind::kCaching ? 0 : 1]; }

  void give_back(RegionKind k, uint64_t bytes) {
    std::lock_guard lock(mu);
    region(k).used -= bytes;
  }
};

Reservation::Reservation(std::shared_ptr<State> state, RegionKind kind, uint64_t bytes, std::string owner)
    : state_(std::move(state)), kind_(kind), bytes_(bytes), owner_(std::move(owner)) {}

Reservation::Reservation(Reservation&& other) noexcept
    : state_(std::move(other.state_)), kind_(other.kind_), bytes_(other.bytes_), owner_(std::move(other.owner_)) {
  other.state_ = nullptr;
}

Reservation& Reservation::operator=(Reservation&& other) noexcept {
  if (this != &other) {
    release();
    state_ = std::move(other.state_);
    other.state_ = nullptr;
    kind_ = other.kind_;
    bytes_ = other.bytes_;
    owner_ = std::move(other.owner_);
  }
  return *this;
}

Reservation::~Reservation() { release(); }

void Reservation::release() {
  if (!state_) return;
  state_->give_back(kind_, bytes_);
  state_ = nullptr;
}

CachePin::CachePin(std::shared_ptr<const CacheEntry> entry) : entry_(std::move(entry)) {
  if (entry_) entry_->pins.fetch_add(1);
}

CachePin& CachePin::operator=(CachePin&& other) noexcept {
  if (this != &other) {
    if (entry_) entry_->pins.fetch_sub(1);
    entry_ = std::move(other.entry_);
  }
  return *this;
}

CachePin::~CachePin() {
  if (entry_) entry_->pins.fetch_sub(1);
}

BufferManager::BufferManager(BufferConfig config) : config_(config), state_(std::make_shared<Reservation::State>()) {
  state_->region(RegionKind::kCaching).capacity = config.caching_bytes;
  state_->region(RegionKind::kProcessing).capacity = config.processing_bytes;
}

BufferManager::~BufferManager() {
  std::lock_guard lock(cache_mu_);
  cache_reservations_.clear();
}

Reservation BufferManager::reserve(RegionKind kind, uint64_t bytes, std::string owner) {
  if (bytes == 0) raise(ErrorCode::kInvalidArgument, "reservation of zero bytes");
  std::lock_guard lock(state_->mu);
  auto& r = state_->region(kind);
  if (bytes > r.capacity - r.used) {
    ++state_->exhaustion_events;
    auto code = kind == RegionKind::kCaching ? ErrorCode::kCacheFull : ErrorCode::kProcessingExhausted;
    raise(code, std::string(region_name(kind)) + " region exhausted: " + owner + " requested " + std::to_string(bytes) +
                    " bytes, " + std::to_string(r.capacity - r.used) + " of " + std::to_string(r.capacity) +
                    " available");
  }
  r.used += bytes;
  r.high_water = std::max(r.high_water, r.used);
  return Reservation(state_, kind, bytes, std::move(owner));
}

std::shared_ptr<const CacheEntry> BufferManager::cache_table(const Table& t) {
  std::lock_guard lock(cache_mu_);
  if (auto it = cache_.find(t.name()); it != cache_.end()) return it->second;
  uint64_t bytes = 0;
  for (const auto& b : t.batches()) bytes += b.byte_size();
  Reservation grant;
  if (bytes > 0) grant = reserve(RegionKind::kCaching, bytes, "table " + t.name());
  auto entry = std::make_shared<CacheEntry>();
  entry->id = next_entry_id_++;
  entry->table = t;
  entry->resident_bytes = bytes;
  cache_.emplace(t.name(), entry);
  if (grant.active()) cache_reservations_.emplace(t.name(), std::move(grant));
  {
    std::lock_guard state_lock(state_->mu);
    ++state_->ingestions;
  }
  spdlog::debug("cached table {} ({} rows, {} bytes)", t.name(), t.num_rows(), bytes);
  return entry;
}

std::shared_ptr<const CacheEntry> BufferManager::find(const std::string& name) const {
  std::lock_guard lock(cache_mu_);
  auto it = cache_.find(name);
  return it == cache_.end() ? nullptr : it->second;
}

CachePin BufferManager::pin(const std::string& name) const {
  auto entry = find(name);
  if (!entry) raise(ErrorCode::kMissingTable, "table '" + name + "' is not loaded");
  return CachePin(std::move(entry));
}

bool BufferManager::contains(const std::string& name) const { return find(name) != nullptr; }

std::vector<std::string> BufferManager::table_names() const {
  std::lock_guard lock(cache_mu_);
  std::vector<std::string> out;
  for (const auto& [name, entry] : cache_) out.push_back(name);
  return out;
}

void BufferManager::drop_table(const std::string& name) {
  std::lock_guard lock(cache_mu_);
  auto it = cache_.find(name);
  if (it == cache_.end()) raise(ErrorCode::kUnknownEntry, "table '" + name + "' is not cached");
  if (it->second->pins.load() > 0) raise(ErrorCode::kInvalidArgument, "table '" + name + "' is pinned");
  cache_.erase(it);
  cache_reservations_.erase(name);
}

BufferStats BufferManager::stats() const {
  BufferStats s;
  {
    std::lock_guard lock(cache_mu_);
    s.cache_entries = cache_.size();
    for (const auto& [name, entry] : cache_) s.cache_bytes += entry->resident_bytes;
  }
  std::lock_guard lock(state_->mu);
  s.caching = state_->region(RegionKind::kCaching);
  s.processing = state_->region(RegionKind::kProcessing);
  s.exhaustion_events = state_->exhaustion_events;
  s.ingestions = state_->ingestions;
  return s;
}

}  // namespace siriette::buffer
