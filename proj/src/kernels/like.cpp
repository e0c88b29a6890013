#include "like.hpp"

namespace siriette::kernels {

LikeMatcher::LikeMatcher(std::string_view pattern) {
  for (size_t i = 0; i < pattern.size(); ++i) {
    char c = pattern[i];
    if (c == '\\' && i + 1 < pattern.size()) {
      tokens_.push_back({Kind::kLiteral, pattern[++i]});
    } else if (c == '%') {
      if (tokens_.empty() || tokens_.back().kind != Kind::kRun) tokens_.push_back({Kind::kRun, 0});
    } else if (c == '_') {
      tokens_.push_back({Kind::kAny, 0});
    } else {
      tokens_.push_back({Kind::kLiteral, c});
    }
  }

  size_t first = 0, last = tokens_.size();
  bool lead = first < last && tokens_[first].kind == Kind::kRun;
  if (lead) ++first;
  bool trail = last > first && tokens_[last - 1].kind == Kind::kRun;
  if (trail) --last;
  for (size_t i = first; i < last; ++i) {
    if (tokens_[i].kind != Kind::kLiteral) return;
    literal_.push_back(tokens_[i].c);
  }
  if (lead && trail) {
    shape_ = Shape::kContains;
  } else if (lead) {
    shape_ = Shape::kSuffix;
  } else if (trail) {
    shape_ = Shape::kPrefix;
  } else {
    shape_ = Shape::kExact;
  }
}

bool LikeMatcher::match(std::string_view s) const {
  switch (shape_) {
    case Shape::kExact: return s == literal_;
    case Shape::kPrefix: return s.starts_with(literal_);
    case Shape::kSuffix: return s.ends_with(literal_);
    case Shape::kContains: return s.find(literal_) != std::string_view::npos;
    case Shape::kGeneral: break;
  }
  // Greedy matching with backtracking to the most recent run.
  size_t ti = 0, si = 0;
  size_t star_t = std::string::npos, star_s = 0;
  while (si < s.size()) {
    if (ti < tokens_.size()) {
      const auto& t = tokens_[ti];
      if (t.kind == Kind::kRun) {
        star_t = ti++;
        star_s = si;
        continue;
      }
      if (t.kind == Kind::kAny || t.c == s[si]) {
        ++ti;
        ++si;
        continue;
      }
    }
    if (star_t == std::string::npos) return false;
    ti = star_t + 1;
    si = ++star_s;
  }
  while (ti < tokens_.size() && tokens_[ti].kind == Kind::kRun) ++ti;
  return ti == tokens_.size();
}

}  // namespace siriette::kernels
