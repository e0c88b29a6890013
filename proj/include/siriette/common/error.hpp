#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace siriette {

enum class ErrorCode {
  kSyntaxError,
  kUnknownRelation,
  kUnknownFunction,
  kTypeMismatch,
  kMissingTable,
  kOrdinalOutOfRange,
  kIndexOutOfRange,
  kIndexOverflow,
  kSchemaMismatch,
  kProcessingExhausted,
  kCacheFull,
  kUnsupportedFeature,
  kSequenceGap,
  kTransportError,
  kBackpressureTimeout,
  kUnknownEntry,
  kNoAliveNodes,
  kDispatchTimeout,
  kNodeLost,
  kParseError,
  kSumOverflow,
  kArithmeticOverflow,
  kBindError,
  kCoordinatorUnreachable,
  kCancelled,
  kInvalidArgument,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

// Errors a user can fix by changing their input (exit code 1 in the CLI).
bool is_user_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace siriette
