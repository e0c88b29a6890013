#include "siriette/coordinator/protocol.hpp"

#include <nlohmann/json.hpp>

#include "siriette/columnar/serialize.hpp"

namespace siriette::coordinator {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 10> kTypeNames{"LOAD", "PREP",  "START", "CANCEL", "STATUS",
                                                      "JOIN", "ACK",   "ERROR", "DONE",   "STATUS_REPLY"};

MessageType type_from_name(std::string_view s) {
  for (size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == s) return static_cast<MessageType>(i);
  }
  raise(ErrorCode::kTransportError, "unknown control message type '" + std::string(s) + "'");
}

std::string to_hex(std::span<const uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(bytes.size() * 2, '0');
  for (size_t i = 0; i < bytes.size(); ++i) {
    out[2 * i] = kDigits[bytes[i] >> 4];
    out[2 * i + 1] = kDigits[bytes[i] & 0xF];
  }
  return out;
}

std::vector<uint8_t> from_hex(std::string_view s) {
  auto nibble = [](char c) -> uint8_t {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    raise(ErrorCode::kTransportError, "bad hex digit in control message");
  };
  if (s.size() % 2) raise(ErrorCode::kTransportError, "odd hex length in control message");
  std::vector<uint8_t> out(s.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) out[i] = (nibble(s[2 * i]) << 4) | nibble(s[2 * i + 1]);
  return out;
}

json schema_json(const Schema& s) {
  json cols = json::array();
  for (const auto& f : s) cols.push_back({{"name", f.name}, {"type", f.type.to_string()}, {"nullable", f.nullable}});
  return cols;
}

Schema schema_from(const json& cols) {
  Schema s;
  for (const auto& c : cols) {
    s.push_back({c.at("name").get<std::string>(), DataType::parse(c.at("type").get<std::string>()),
                 c.at("nullable").get<bool>()});
  }
  return s;
}

}  // namespace

std::string_view message_type_name(MessageType t) { return kTypeNames[static_cast<size_t>(t)]; }

bool is_request(MessageType t) {
  switch (t) {
    case MessageType::kLoad:
    case MessageType::kPrep:
    case MessageType::kStart:
    case MessageType::kCancel:
    case MessageType::kStatus:
      return true;
    default:
      return false;
  }
}

std::optional<ErrorCode> error_code_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kInternal); ++i) {
    auto c = static_cast<ErrorCode>(i);
    if (error_code_name(c) == name) return c;
  }
  return std::nullopt;
}

std::vector<uint8_t> encode(const ControlMessage& m) {
  json j;
  j["type"] = message_type_name(m.type);
  j["query"] = m.query;
  j["seq"] = m.sequence;
  j["node"] = m.node;
  if (!m.ref.empty()) j["ref"] = m.ref;
  if (m.code) j["code"] = error_code_name(*m.code);
  if (!m.message.empty()) j["message"] = m.message;
  if (m.load) {
    j["table"] = m.load->table;
    j["schema"] = schema_json(m.load->schema);
    j["rows"] = to_hex(serialize_batch(m.load->rows));
    j["replace"] = m.load->replace;
  }
  if (m.prep) {
    j["plan"] = m.prep->plan;
    j["coordinator"] = m.prep->coordinator;
    json nodes = json::array();
    for (const auto& n : m.prep->nodes) nodes.push_back({{"id", n.id}, {"host", n.host}, {"port", n.port}});
    j["nodes"] = nodes;
  }
  if (m.join) j["address"] = {{"id", m.join->id}, {"host", m.join->host}, {"port", m.join->port}};
  if (m.status) {
    j["tables"] = m.status->tables;
  }
  if (m.done) {
    const auto& d = *m.done;
    j["ok"] = d.ok;
    if (d.code) j["code"] = error_code_name(*d.code);
    j["message"] = d.message;
    j["fragments"] = d.fragments;
    if (d.failed_fragment) j["failed_fragment"] = *d.failed_fragment;
    j["fallback"] = d.fallback;
    json spans = json::array();
    for (const auto& s : d.spans) {
      spans.push_back({static_cast<int>(s.category), s.node, s.label, s.start_ns, s.stop_ns});
    }
    j["spans"] = spans;
  }
  auto text = j.dump();
  return {text.begin(), text.end()};
}

ControlMessage decode(std::span<const uint8_t> bytes) {
  try {
    auto j = json::parse(bytes.begin(), bytes.end());
    ControlMessage m;
    m.type = type_from_name(j.at("type").get<std::string>());
    m.query = j.at("query").get<uint64_t>();
    m.sequence = j.at("seq").get<uint64_t>();
    m.node = j.at("node").get<NodeId>();
    m.ref = j.value("ref", "");
    if (j.contains("code")) m.code = error_code_from_name(j["code"].get<std::string>()).value_or(ErrorCode::kInternal);
    m.message = j.value("message", "");
    switch (m.type) {
      case MessageType::kLoad: {
        LoadMessage l;
        l.table = j.at("table").get<std::string>();
        l.schema = schema_from(j.at("schema"));
        auto raw = from_hex(j.at("rows").get<std::string>());
        l.rows = deserialize_batch(raw);
        l.replace = j.at("replace").get<bool>();
        m.load = std::move(l);
        break;
      }
      case MessageType::kPrep: {
        PrepMessage p;
        p.query = m.query;
        p.plan = j.at("plan").get<std::string>();
        p.coordinator = j.at("coordinator").get<NodeId>();
        for (const auto& n : j.at("nodes")) {
          p.nodes.push_back({n.at("id").get<NodeId>(), n.at("host").get<std::string>(), n.at("port").get<uint16_t>()});
        }
        m.prep = std::move(p);
        break;
      }
      case MessageType::kJoin: {
        const auto& a = j.at("address");
        m.join = NodeAddress{a.at("id").get<NodeId>(), a.at("host").get<std::string>(), a.at("port").get<uint16_t>()};
        break;
      }
      case MessageType::kStatusReply:
        m.status = StatusReply{m.node, m.sequence, j.at("tables").get<std::vector<std::string>>()};
        break;
      case MessageType::kDone: {
        DoneMessage d;
        d.query = m.query;
        d.node = m.node;
        d.ok = j.at("ok").get<bool>();
        d.code = m.code;
        d.message = m.message;
        d.fragments = j.at("fragments").get<std::vector<int>>();
        if (j.contains("failed_fragment")) d.failed_fragment = j["failed_fragment"].get<int>();
        d.fallback = j.at("fallback").get<bool>();
        for (const auto& s : j.at("spans")) {
          d.spans.push_back({static_cast<exec::Category>(s.at(0).get<int>()), s.at(1).get<int>(),
                             s.at(2).get<std::string>(), s.at(3).get<int64_t>(), s.at(4).get<int64_t>()});
        }
        m.done = std::move(d);
        break;
      }
      default:
        break;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kTransportError, std::string("malformed control message: ") + e.what());
  }
}

ControlMessage make_ack(MessageType ref, uint64_t query, NodeId node) {
  ControlMessage m;
  m.type = MessageType::kAck;
  m.ref = message_type_name(ref);
  m.query = query;
  m.node = node;
  return m;
}

ControlMessage make_error(MessageType ref, uint64_t query, NodeId node, const Error& e) {
  ControlMessage m;
  m.type = MessageType::kError;
  m.ref = message_type_name(ref);
  m.query = query;
  m.node = node;
  m.code = e.code();
  m.message = bare_message(e);
  return m;
}

std::string bare_message(const Error& e) {
  std::string_view w = e.what();
  auto prefix = std::string(error_code_name(e.code())) + ": ";
  if (w.starts_with(prefix)) w.remove_prefix(prefix.size());
  return std::string(w);
}

}  // namespace siriette::coordinator
