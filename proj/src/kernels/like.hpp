#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace siriette::kernels {

// SQL LIKE over bytes: % matches any run, _ any single byte, backslash escapes
// the next character.
class LikeMatcher {
 public:
  explicit LikeMatcher(std::string_view pattern);
  bool match(std::string_view s) const;

 private:
  enum class Kind { kLiteral, kAny, kRun };
  struct Token {
    Kind kind;
    char c = 0;
  };
  std::vector<Token> tokens_;
  // Fast paths for the common "lit%", "%lit" and "%lit%" shapes.
  enum class Shape { kGeneral, kExact, kPrefix, kSuffix, kContains } shape_ = Shape::kGeneral;
  std::string literal_;
};

}  // namespace siriette::kernels
