#include "siriette/common/error.hpp"

namespace siriette {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnknownRelation: return "UnknownRelation";
    case ErrorCode::kUnknownFunction: return "UnknownFunction";
    case ErrorCode::kTypeMismatch: return "TypeMismatch";
    case ErrorCode::kMissingTable: return "MissingTable";
    case ErrorCode::kOrdinalOutOfRange: return "OrdinalOutOfRange";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kIndexOverflow: return "IndexOverflow";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kProcessingExhausted: return "ProcessingExhausted";
    case ErrorCode::kCacheFull: return "CacheFull";
    case ErrorCode::kUnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::kSequenceGap: return "SequenceGap";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kBackpressureTimeout: return "BackpressureTimeout";
    case ErrorCode::kUnknownEntry: return "UnknownEntry";
    case ErrorCode::kNoAliveNodes: return "NoAliveNodes";
    case ErrorCode::kDispatchTimeout: return "DispatchTimeout";
    case ErrorCode::kNodeLost: return "NodeLost";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSumOverflow: return "SumOverflow";
    case ErrorCode::kArithmeticOverflow: return "ArithmeticOverflow";
    case ErrorCode::kBindError: return "BindError";
    case ErrorCode::kCoordinatorUnreachable: return "CoordinatorUnreachable";
    case ErrorCode::kCancelled: return "Cancelled";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

bool is_user_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntaxError:
    case ErrorCode::kUnknownRelation:
    case ErrorCode::kUnknownFunction:
    case ErrorCode::kTypeMismatch:
    case ErrorCode::kMissingTable:
    case ErrorCode::kOrdinalOutOfRange:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kParseError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kCacheFull:
    case ErrorCode::kBindError:
    case ErrorCode::kCoordinatorUnreachable:
      return true;
    default:
      return false;
  }
}

}  // namespace siriette
