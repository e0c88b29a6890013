#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "siriette/columnar/batch.hpp"
#include "siriette/common/error.hpp"
#include "siriette/exchange/transport.hpp"
#include "siriette/exec/profiler.hpp"

namespace siriette::coordinator {

using exchange::NodeId;

// Control messages travel as JSON text over the node transport.
enum class MessageType { kLoad, kPrep, kStart, kCancel, kStatus, kJoin, kAck, kError, kDone, kStatusReply };

std::string_view message_type_name(MessageType t);
// Requests are handled by the receiving node; everything else is a reply
// addressed to the coordinator role.
bool is_request(MessageType t);

struct NodeAddress {
  NodeId id = 0;
  std::string host;
  uint16_t port = 0;
};

struct LoadMessage {
  std::string table;
  Schema schema;
  Batch rows;  // this node's row range
  bool replace = false;
};

struct PrepMessage {
  uint64_t query = 0;
  std::string plan;  // plan document text
  std::vector<NodeAddress> nodes;  // participating (alive) nodes
  NodeId coordinator = 0;
};

struct DoneMessage {
  uint64_t query = 0;
  NodeId node = 0;
  bool ok = true;
  std::optional<ErrorCode> code;
  std::string message;
  std::vector<int> fragments;  // fragment ids run on this node
  std::optional<int> failed_fragment;
  bool fallback = false;
  std::vector<exec::Profiler::Span> spans;
};

struct StatusReply {
  NodeId node = 0;
  uint64_t sequence = 0;
  std::vector<std::string> tables;
};

struct ControlMessage {
  MessageType type = MessageType::kStatus;
  uint64_t query = 0;
  uint64_t sequence = 0;
  NodeId node = 0;
  std::string ref;  // ACK/ERROR: the request type answered
  std::optional<LoadMessage> load;
  std::optional<PrepMessage> prep;
  std::optional<DoneMessage> done;
  std::optional<StatusReply> status;
  std::optional<NodeAddress> join;
  std::optional<ErrorCode> code;  // ERROR
  std::string message;            // ERROR
};

std::vector<uint8_t> encode(const ControlMessage& m);
// TransportError on malformed input.
ControlMessage decode(std::span<const uint8_t> bytes);

ControlMessage make_ack(MessageType ref, uint64_t query, NodeId node);
ControlMessage make_error(MessageType ref, uint64_t query, NodeId node, const Error& e);

// Error text without the leading code name, for re-raising on another node.
std::string bare_message(const Error& e);

// Inverse of error_code_name; nullopt for unknown names.
std::optional<ErrorCode> error_code_from_name(std::string_view name);

}  // namespace siriette::coordinator
