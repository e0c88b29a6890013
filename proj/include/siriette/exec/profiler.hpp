#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace siriette::exec {

enum class Category { kJoin, kGroupBy, kFilter, kAggregation, kOrderBy, kExchange, kOther };
inline constexpr size_t kCategoryCount = 7;

std::string_view category_name(Category c);

using Clock = std::chrono::steady_clock;

struct OperatorTiming {
  int node = -1;
  std::string label;
  Category category = Category::kOther;
  uint64_t calls = 0;
  int64_t nanos = 0;  // summed over threads, may exceed the query wall time
};

struct ProfileReport {
  int64_t total_ns = 0;
  // Wall time attributed per category; concurrent categories share a slice
  // equally, so the sum never exceeds total_ns.
  std::array<int64_t, kCategoryCount> category_ns{};
  // compute: any non-exchange operator running; exchange: exchange work with no
  // operator running; other: the remainder. Sums to total_ns exactly.
  int64_t compute_ns = 0;
  int64_t exchange_ns = 0;
  int64_t other_ns = 0;
  std::vector<OperatorTiming> operators;

  int64_t category(Category c) const { return category_ns[static_cast<size_t>(c)]; }
  std::string to_text() const;
  std::string to_json() const;
};

// Collects operator intervals for one query window. Thread-safe.
class Profiler {
 public:
  class Scope {
   public:
    Scope(Profiler* p, Category c, int node, std::string_view label);
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
    ~Scope();

   private:
    Profiler* profiler_;
    Category category_;
    int node_;
    std::string_view label_;
    Clock::time_point start_;
  };

  void begin();
  void end();
  void record(Category c, int node, std::string_view label, Clock::time_point start, Clock::time_point stop);

  ProfileReport report() const;

  // Intervals on the process-wide steady clock, for merging profiles of
  // several nodes into one timeline.
  struct Span {
    Category category = Category::kOther;
    int node = -1;
    std::string label;
    int64_t start_ns = 0;
    int64_t stop_ns = 0;
  };
  std::vector<Span> spans() const;
  void absorb(const std::vector<Span>& spans);
  Clock::time_point started_at() const;

 private:
  struct Interval {
    Category category;
    int node;
    int64_t start;
    int64_t stop;
    std::string label;
  };

  mutable std::mutex mu_;
  Clock::time_point begin_{};
  Clock::time_point end_{};
  bool open_ = false;
  std::vector<Interval> intervals_;
  std::vector<OperatorTiming> operators_;
};

}  // namespace siriette::exec
