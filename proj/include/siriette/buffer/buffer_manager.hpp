#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "siriette/columnar/batch.hpp"

namespace siriette::buffer {

enum class RegionKind { kCaching, kProcessing };

std::string_view region_name(RegionKind kind);

inline constexpr uint64_t kDefaultMemoryTotal = uint64_t{1} << 30;

struct BufferConfig {
  uint64_t caching_bytes = kDefaultMemoryTotal / 2;
  uint64_t processing_bytes = kDefaultMemoryTotal / 2;

  // Half of `total` for each region.
  static BufferConfig split(uint64_t total);
};

struct RegionStats {
  uint64_t capacity = 0;
  uint64_t used = 0;
  uint64_t high_water = 0;
};

struct BufferStats {
  RegionStats caching;
  RegionStats processing;
  size_t cache_entries = 0;
  uint64_t cache_bytes = 0;
  uint64_t exhaustion_events = 0;
  // Tables actually copied into the caching region.
  uint64_t ingestions = 0;
};

struct CacheEntry {
  uint64_t id = 0;
  Table table;
  uint64_t resident_bytes = 0;
  mutable std::atomic<int> pins{0};
};

class BufferManager;

// Single-use grant of region bytes; released on destruction or release().
class Reservation {
 public:
  Reservation() = default;
  Reservation(Reservation&& other) noexcept;
  Reservation& operator=(Reservation&& other) noexcept;
  Reservation(const Reservation&) = delete;
  Reservation& operator=(const Reservation&) = delete;
  ~Reservation();

  RegionKind kind() const { return kind_; }
  uint64_t bytes() const { return bytes_; }
  const std::string& owner() const { return owner_; }
  bool active() const { return state_ != nullptr; }

  void release();

 private:
  friend class BufferManager;
  struct State;
  Reservation(std::shared_ptr<State> state, RegionKind kind, uint64_t bytes, std::string owner);

  std::shared_ptr<State> state_;
  RegionKind kind_ = RegionKind::kProcessing;
  uint64_t bytes_ = 0;
  std::string owner_;
};

// Keeps a cache entry pinned while scans read it.
class CachePin {
 public:
  CachePin() = default;
  explicit CachePin(std::shared_ptr<const CacheEntry> entry);
  CachePin(CachePin&& other) noexcept = default;
  CachePin& operator=(CachePin&& other) noexcept;
  CachePin(const CachePin&) = delete;
  CachePin& operator=(const CachePin&) = delete;
  ~CachePin();

  const CacheEntry* operator->() const { return entry_.get(); }
  const CacheEntry& operator*() const { return *entry_; }
  explicit operator bool() const { return entry_ != nullptr; }

 private:
  std::shared_ptr<const CacheEntry> entry_;
};

// Caching region for base tables, processing region for intermediates.
// Accounting is logical: bytes are the columnar layout sizes. Thread-safe.
class BufferManager {
 public:
  explicit BufferManager(BufferConfig config = {});
  ~BufferManager();

  // Idempotent per table name; CacheFull when the table does not fit.
  std::shared_ptr<const CacheEntry> cache_table(const Table& t);
  std::shared_ptr<const CacheEntry> find(const std::string& name) const;
  CachePin pin(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> table_names() const;
  // Drops an unpinned entry; UnknownEntry when absent, InvalidArgument while pinned.
  void drop_table(const std::string& name);

  // ProcessingExhausted (processing) or CacheFull (caching) when the grant
  // would exceed capacity.
  Reservation reserve(RegionKind kind, uint64_t bytes, std::string owner);

  BufferStats stats() const;
  const BufferConfig& config() const { return config_; }

 private:
  BufferConfig config_;
  std::shared_ptr<Reservation::State> state_;
  mutable std::mutex cache_mu_;
  std::map<std::string, std::shared_ptr<CacheEntry>> cache_;
  std::map<std::string, Reservation> cache_reservations_;
  uint64_t next_entry_id_ = 1;
};

}  // namespace siriette::buffer
