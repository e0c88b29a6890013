#include "siriette/exec/profiler.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace siriette::exec {

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kJoin: return "join";
    case Category::kGroupBy: return "group-by";
    case Category::kFilter: return "filter";
    case Category::kAggregation: return "aggregation";
    case Category::kOrderBy: return "order-by";
    case Category::kExchange: return "exchange";
    case Category::kOther: return "other";
  }
  return "other";
}

Profiler::Scope::Scope(Profiler* p, Category c, int node, std::string_view label)
    : profiler_(p), category_(c), node_(node), label_(label), start_(p ? Clock::now() : Clock::time_point{}) {}

Profiler::Scope::~Scope() {
  if (profiler_) profiler_->record(category_, node_, label_, start_, Clock::now());
}

void Profiler::begin() {
  std::lock_guard lock(mu_);
  intervals_.clear();
  operators_.clear();
  begin_ = Clock::now();
  open_ = true;
}

void Profiler::end() {
  std::lock_guard lock(mu_);
  end_ = Clock::now();
  open_ = false;
}

void Profiler::record(Category c, int node, std::string_view label, Clock::time_point start, Clock::time_point stop) {
  std::lock_guard lock(mu_);
  auto ns = [&](Clock::time_point t) { return std::chrono::duration_cast<std::chrono::nanoseconds>(t - begin_).count(); };
  intervals_.push_back({c, node, ns(start), ns(stop), std::string(label)});
  auto it = std::find_if(operators_.begin(), operators_.end(),
                         [&](const OperatorTiming& o) { return o.node == node && o.category == c && o.label == label; });
  if (it == operators_.end()) {
    operators_.push_back({node, std::string(label), c, 0, 0});
    it = operators_.end() - 1;
  }
  ++it->calls;
  it->nanos += std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
}

std::vector<Profiler::Span> Profiler::spans() const {
  std::lock_guard lock(mu_);
  int64_t base = std::chrono::duration_cast<std::chrono::nanoseconds>(begin_.time_since_epoch()).count();
  std::vector<Span> out;
  out.reserve(intervals_.size());
  for (const auto& iv : intervals_) out.push_back({iv.category, iv.node, iv.label, base + iv.start, base + iv.stop});
  return out;
}

void Profiler::absorb(const std::vector<Span>& spans) {
  auto at = [](int64_t ns) { return Clock::time_point(std::chrono::nanoseconds(ns)); };
  for (const auto& s : spans) record(s.category, s.node, s.label, at(s.start_ns), at(s.stop_ns));
}

Clock::time_point Profiler::started_at() const {
  std::lock_guard lock(mu_);
  return begin_;
}

ProfileReport Profiler::report() const {
  std::lock_guard lock(mu_);
  ProfileReport r;
  auto stop = open_ ? Clock::now() : end_;
  r.total_ns = std::max<int64_t>(0, std::chrono::duration_cast<std::chrono::nanoseconds>(stop - begin_).count());
  r.operators = operators_;
  std::sort(r.operators.begin(), r.operators.end(), [](const OperatorTiming& a, const OperatorTiming& b) {
    return std::tie(a.node, a.category, a.label) < std::tie(b.node, b.category, b.label);
  });

  // Sweep over interval boundaries clipped to the query window.
  std::vector<std::pair<int64_t, int>> edges;  // (time, +-(category+1))
  for (const auto& iv : intervals_) {
    int64_t s = std::clamp<int64_t>(iv.start, 0, r.total_ns);
    int64_t e = std::clamp<int64_t>(iv.stop, 0, r.total_ns);
    if (e <= s) continue;
    int tag = static_cast<int>(iv.category) + 1;
    edges.emplace_back(s, tag);
    edges.emplace_back(e, -tag);
  }
  std::sort(edges.begin(), edges.end());
  std::array<int, kCategoryCount> active{};
  int64_t prev = 0;
  std::array<long double, kCategoryCount> shares{};
  for (const auto& [t, tag] : edges) {
    int64_t d = t - prev;
    if (d > 0) {
      int distinct = 0;
      bool compute = false;
      for (size_t c = 0; c < kCategoryCount; ++c) {
        if (active[c] > 0) {
          ++distinct;
          if (c != static_cast<size_t>(Category::kExchange)) compute = true;
        }
      }
      if (distinct > 0) {
        for (size_t c = 0; c < kCategoryCount; ++c) {
          if (active[c] > 0) shares[c] += static_cast<long double>(d) / distinct;
        }
        if (compute) {
          r.compute_ns += d;
        } else {
          r.exchange_ns += d;
        }
      }
    }
    prev = t;
    active[static_cast<size_t>(std::abs(tag) - 1)] += tag > 0 ? 1 : -1;
  }
  for (size_t c = 0; c < kCategoryCount; ++c) {
    r.category_ns[c] = static_cast<int64_t>(shares[c]);
    // A category that ran at all keeps a nonzero share after truncation.
    if (shares[c] > 0 && r.category_ns[c] == 0) r.category_ns[c] = 1;
  }
  int64_t sum = 0;
  for (auto v : r.category_ns) sum += v;
  if (sum > r.total_ns) {
    // Rounding up single-nanosecond shares can overshoot by a few ns.
    for (auto& v : r.category_ns) {
      if (sum <= r.total_ns) break;
      if (v > 1) {
        int64_t cut = std::min(v - 1, sum - r.total_ns);
        v -= cut;
        sum -= cut;
      }
    }
  }
  r.other_ns = r.total_ns - r.compute_ns - r.exchange_ns;
  return r;
}

namespace {
double ms(int64_t ns) { return static_cast<double>(ns) / 1e6; }
}  // namespace

std::string ProfileReport::to_text() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << "total " << ms(total_ns) << " ms (compute " << ms(compute_ns) << ", exchange " << ms(exchange_ns)
      << ", other " << ms(other_ns) << ")\n";
  for (size_t c = 0; c < kCategoryCount; ++c) {
    out << "  " << category_name(static_cast<Category>(c)) << ": " << ms(category_ns[c]) << " ms\n";
  }
  for (const auto& o : operators) {
    out << "  op " << o.label << " [" << category_name(o.category) << "] calls=" << o.calls << " " << ms(o.nanos)
        << " ms\n";
  }
  return out.str();
}

std::string ProfileReport::to_json() const {
  nlohmann::ordered_json j;
  j["total_ms"] = ms(total_ns);
  j["compute_ms"] = ms(compute_ns);
  j["exchange_ms"] = ms(exchange_ns);
  j["other_ms"] = ms(other_ns);
  auto& cats = j["categories"];
  cats = nlohmann::ordered_json::object();
  for (size_t c = 0; c < kCategoryCount; ++c) cats[std::string(category_name(static_cast<Category>(c)))] = ms(category_ns[c]);
  auto& ops = j["operators"];
  ops = nlohmann::ordered_json::array();
  for (const auto& o : operators) {
    ops.push_back({{"node", o.node}, {"label", o.label}, {"category", category_name(o.category)}, {"calls", o.calls},
                   {"ms", ms(o.nanos)}});
  }
  return j.dump(2);
}

}  // namespace siriette::exec
