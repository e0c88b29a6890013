#include "siriette/exchange/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "siriette/common/error.hpp"
#include "siriette/exchange/frame.hpp"

namespace siriette::exchange {

// ------------------------------------------------------------------ mailbox

void Mailbox::push(Message m) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    queue_.push_back(std::move(m));
  }
  cv_.notify_one();
}

std::optional<Message> Mailbox::pop(Millis timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  auto m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

void Mailbox::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Mailbox::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

// ------------------------------------------------------------------ loopback

class LoopbackTransport : public Transport {
 public:
  LoopbackTransport(std::shared_ptr<LoopbackHub> hub, NodeId id, std::shared_ptr<Mailbox> box)
      : hub_(std::move(hub)), id_(id), box_(std::move(box)) {}

  NodeId self() const override { return id_; }
  void send(NodeId to, std::span<const uint8_t> bytes) override { hub_->deliver(id_, to, bytes); }
  std::optional<Message> receive(Millis timeout) override { return box_->pop(timeout); }
  void close() override { box_->close(); }

 private:
  std::shared_ptr<LoopbackHub> hub_;
  NodeId id_;
  std::shared_ptr<Mailbox> box_;
};

std::shared_ptr<LoopbackHub> LoopbackHub::create() { return std::shared_ptr<LoopbackHub>(new LoopbackHub()); }

std::shared_ptr<Transport> LoopbackHub::endpoint(NodeId id) {
  std::lock_guard lock(mu_);
  auto& box = boxes_[id];
  if (!box || box->closed()) box = std::make_shared<Mailbox>();
  return std::make_shared<LoopbackTransport>(shared_from_this(), id, box);
}

void LoopbackHub::kill(NodeId id) {
  std::lock_guard lock(mu_);
  dead_.insert(id);
}

void LoopbackHub::revive(NodeId id) {
  std::lock_guard lock(mu_);
  dead_.erase(id);
}

bool LoopbackHub::alive(NodeId id) const {
  std::lock_guard lock(mu_);
  return !dead_.contains(id);
}

std::vector<SendRecord> LoopbackHub::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void LoopbackHub::clear_log() {
  std::lock_guard lock(mu_);
  log_.clear();
}

void LoopbackHub::deliver(NodeId from, NodeId to, std::span<const uint8_t> bytes) {
  std::shared_ptr<Mailbox> box;
  {
    std::lock_guard lock(mu_);
    if (dead_.contains(from)) raise(ErrorCode::kTransportError, "node " + std::to_string(from) + " is down");
    if (dead_.contains(to)) raise(ErrorCode::kTransportError, "node " + std::to_string(to) + " is unreachable");
    auto it = boxes_.find(to);
    if (it == boxes_.end()) raise(ErrorCode::kTransportError, "unknown node " + std::to_string(to));
    box = it->second;
    log_.push_back({from, to, bytes.size(), is_frame(bytes)});
  }
  box->push({from, std::vector<uint8_t>(bytes.begin(), bytes.end())});
}

// ------------------------------------------------------------------ tcp

namespace {

bool write_all(int fd, const uint8_t* p, size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    p += w;
    n -= static_cast<size_t>(w);
  }
  return true;
}

bool read_all(int fd, uint8_t* p, size_t n) {
  while (n > 0) {
    ssize_t r = ::recv(fd, p, n, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    p += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

sockaddr_in resolve(const std::string& host, uint16_t port, ErrorCode code) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    raise(code, "cannot resolve host '" + host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

}  // namespace

TcpTransport::TcpTransport(NodeId self, const std::string& host, uint16_t port) : self_(self) {
  auto addr = resolve(host, port, ErrorCode::kBindError);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) raise(ErrorCode::kBindError, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 64) != 0) {
    int err = errno;
    ::close(listen_fd_);
    raise(ErrorCode::kBindError, "cannot listen on " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpTransport::~TcpTransport() { close(); }

void TcpTransport::add_peer(NodeId id, const std::string& host, uint16_t port) {
  Peer* peer = nullptr;
  {
    std::lock_guard lock(mu_);
    auto& p = peers_[id];
    if (!p) p = std::make_unique<Peer>();
    peer = p.get();
  }
  // Peers are never freed while the transport lives; senders may hold them.
  std::lock_guard lock(peer->mu);
  if (peer->host == host && peer->port == port) return;
  if (peer->fd >= 0) ::close(peer->fd);
  peer->fd = -1;
  peer->host = host;
  peer->port = port;
}

bool TcpTransport::has_peer(NodeId id) const {
  std::lock_guard lock(mu_);
  return peers_.contains(id);
}

void TcpTransport::send(NodeId to, std::span<const uint8_t> bytes) {
  Peer* peer = nullptr;
  {
    std::lock_guard lock(mu_);
    if (closed_) raise(ErrorCode::kTransportError, "transport closed");
    if (to == self_) {
      inbox_.push(Message{self_, std::vector<uint8_t>(bytes.begin(), bytes.end())});
      return;
    }
    auto it = peers_.find(to);
    if (it == peers_.end()) raise(ErrorCode::kTransportError, "unknown node " + std::to_string(to));
    peer = it->second.get();
  }
  std::lock_guard lock(peer->mu);
  if (peer->fd < 0) {
    auto addr = resolve(peer->host, peer->port, ErrorCode::kTransportError);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0 || ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      int err = errno;
      if (fd >= 0) ::close(fd);
      raise(ErrorCode::kTransportError, "cannot connect to node " + std::to_string(to) + " at " + peer->host + ":" +
                                            std::to_string(peer->port) + ": " + std::strerror(err));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    peer->fd = fd;
  }
  if (bytes.size() > UINT32_MAX) raise(ErrorCode::kTransportError, "message too large");
  uint8_t prefix[6];
  auto len = static_cast<uint32_t>(bytes.size());
  std::memcpy(prefix, &len, 4);
  std::memcpy(prefix + 4, &self_, 2);
  if (!write_all(peer->fd, prefix, sizeof(prefix)) || !write_all(peer->fd, bytes.data(), bytes.size())) {
    ::close(peer->fd);
    peer->fd = -1;
    raise(ErrorCode::kTransportError, "send to node " + std::to_string(to) + " failed");
  }
}

std::optional<Message> TcpTransport::receive(Millis timeout) { return inbox_.pop(timeout); }

void TcpTransport::accept_loop() {
  for (;;) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    std::lock_guard lock(mu_);
    if (closed_) {
      ::close(fd);
      return;
    }
    accepted_.push_back(fd);
    readers_.emplace_back([this, fd] { read_loop(fd); });
  }
}

void TcpTransport::read_loop(int fd) {
  for (;;) {
    uint8_t prefix[6];
    if (!read_all(fd, prefix, sizeof(prefix))) return;
    uint32_t len;
    NodeId from;
    std::memcpy(&len, prefix, 4);
    std::memcpy(&from, prefix + 4, 2);
    Message m;
    m.from = from;
    m.bytes.resize(len);
    if (!read_all(fd, m.bytes.data(), len)) return;
    inbox_.push(std::move(m));
  }
}

void TcpTransport::close() {
  std::vector<std::thread> readers;
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    closed_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    for (int fd : accepted_) ::shutdown(fd, SHUT_RDWR);
  }
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(mu_);
    readers.swap(readers_);
  }
  for (auto& t : readers) t.join();
  std::lock_guard lock(mu_);
  for (int fd : accepted_) ::close(fd);
  accepted_.clear();
  for (auto& [id, p] : peers_) {
    std::lock_guard plock(p->mu);
    if (p->fd >= 0) ::close(p->fd);
    p->fd = -1;
  }
  inbox_.close();
}

}  // namespace siriette::exchange
