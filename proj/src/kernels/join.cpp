#include <bit>

#include "siriette/kernels/hash.hpp"
#include "siriette/kernels/kernels.hpp"
#include "siriette/kernels/rows.hpp"

namespace siriette::kernels {

namespace {

bool any_null(std::span<const Column> keys, size_t row) {
  for (const auto& k : keys) {
    if (!k.is_valid(row)) return true;
  }
  return false;
}

std::vector<ColumnView> views(std::span<const Column> cols) {
  std::vector<ColumnView> out;
  out.reserve(cols.size());
  for (const auto& c : cols) out.emplace_back(c);
  return out;
}

}  // namespace

JoinTable::JoinTable(std::vector<Column> keys) : keys_(std::move(keys)) {
  rows_ = keys_.empty() ? 0 : keys_[0].size();
  for (const auto& k : keys_) {
    if (k.size() != rows_) raise(ErrorCode::kInternal, "join build keys differ in length");
  }
  size_t cap = std::bit_ceil(std::max<size_t>(8, rows_ * 10 / 7 + 1));
  mask_ = cap - 1;
  slot_hash_.assign(cap, 0);
  slots_.assign(cap, -1);
  next_.assign(rows_, -1);
  std::vector<int64_t> tail(cap, -1);
  auto hashes = hash_rows(keys_);
  // Null-keyed rows never match and stay out of the index.
  for (size_t r = 0; r < rows_; ++r) {
    if (any_null(keys_, r)) continue;
    uint64_t h = hashes[r];
    size_t s = h & mask_;
    while (slots_[s] != -1 && slot_hash_[s] != h) s = (s + 1) & mask_;
    if (slots_[s] == -1) {
      slots_[s] = static_cast<int64_t>(r);
      slot_hash_[s] = h;
    } else {
      next_[static_cast<size_t>(tail[s])] = static_cast<int64_t>(r);
    }
    tail[s] = static_cast<int64_t>(r);
  }
}

size_t JoinTable::byte_size() const {
  return slot_hash_.size() * sizeof(uint64_t) + slots_.size() * sizeof(int64_t) + next_.size() * sizeof(int64_t);
}

JoinTable join_build(std::vector<Column> keys) { return JoinTable(std::move(keys)); }

JoinResult join_probe(const JoinTable& t, std::span<const Column> probe_keys, JoinType type, uint64_t narrow_limit) {
  size_t n = probe_keys.empty() ? 0 : probe_keys[0].size();
  if (probe_keys.size() != t.keys_.size()) raise(ErrorCode::kInternal, "join key count mismatch");
  for (size_t k = 0; k < probe_keys.size(); ++k) {
    if (probe_keys[k].type().id != t.keys_[k].type().id) {
      raise(ErrorCode::kTypeMismatch, "probe key type differs from build key type");
    }
  }
  auto hashes = hash_rows(probe_keys);
  auto pv = views(probe_keys);
  auto bv = views(t.keys_);
  narrow_limit = std::min(narrow_limit, SelectionVector::kDefaultNarrowLimit);
  auto check = [&](uint64_t idx) {
    if (idx > narrow_limit) {
      raise(ErrorCode::kIndexOverflow,
            "row index " + std::to_string(idx) + " exceeds narrow limit " + std::to_string(narrow_limit));
    }
    return static_cast<int32_t>(idx);
  };

  std::vector<int32_t> build_out, probe_out;
  for (size_t r = 0; r < n; ++r) {
    bool matched = false;
    if (!any_null(probe_keys, r) && t.rows_ > 0) {
      uint64_t h = hashes[r];
      size_t s = h & t.mask_;
      while (t.slots_[s] != -1 && t.slot_hash_[s] != h) s = (s + 1) & t.mask_;
      for (int64_t b = t.slots_[s]; b != -1; b = t.next_[static_cast<size_t>(b)]) {
        bool eq = true;
        for (size_t k = 0; k < pv.size() && eq; ++k) eq = pv[k].compare(r, bv[k], static_cast<size_t>(b)) == 0;
        if (!eq) continue;
        matched = true;
        if (type == JoinType::kSemi || type == JoinType::kAnti) break;
        build_out.push_back(check(static_cast<uint64_t>(b)));
        probe_out.push_back(check(r));
      }
    }
    switch (type) {
      case JoinType::kLeft:
        if (!matched) {
          build_out.push_back(SelectionVector::kNullNarrow);
          probe_out.push_back(check(r));
        }
        break;
      case JoinType::kSemi:
        if (matched) probe_out.push_back(check(r));
        break;
      case JoinType::kAnti:
        if (!matched) probe_out.push_back(check(r));
        break;
      case JoinType::kInner: break;
    }
  }
  return {SelectionVector::narrow(std::move(build_out)), SelectionVector::narrow(std::move(probe_out))};
}

}  // namespace siriette::kernels
