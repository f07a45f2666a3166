#include "pmcdb/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "pmcdb/codec.hpp"

namespace pmcdb {

namespace {

[[noreturn]] void throw_io(const std::string& what) {
  throw Error(ErrorKind::Io, what + ": " + std::strerror(errno));
}

// Returns false on orderly EOF before any byte was read.
bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw Error(ErrorKind::Io, "connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw_io("recv");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void write_all(int fd, ByteView data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t r = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw_io("send");
    }
    sent += static_cast<std::size_t>(r);
  }
}

// Reads one frame; nullopt on clean EOF.
std::optional<Bytes> read_frame(int fd) {
  Bytes frame(wire::kFrameHeader);
  if (!read_exact(fd, frame.data(), frame.size())) return std::nullopt;
  const std::uint32_t len = (std::uint32_t{frame[0]} << 24) | (std::uint32_t{frame[1]} << 16) |
                            (std::uint32_t{frame[2]} << 8) | frame[3];
  if (len > wire::kMaxPayload) throw_protocol("frame payload exceeds limit");
  frame.resize(wire::kFrameHeader + len);
  if (len > 0 && !read_exact(fd, frame.data() + wire::kFrameHeader, len)) {
    throw Error(ErrorKind::Io, "connection closed mid-frame");
  }
  return frame;
}

sockaddr_in resolve(const Address& addr) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(addr.port);
  if (::inet_pton(AF_INET, addr.host.c_str(), &sa.sin_addr) == 1) return sa;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(addr.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorKind::Io, "cannot resolve host '" + addr.host + "'");
  }
  sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return sa;
}

}  // namespace

Address parse_address(const std::string& text) {
  Address a;
  auto colon = text.rfind(':');
  std::string port = text;
  if (colon != std::string::npos) {
    a.host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  if (port.empty() || port.size() > 5 ||
      port.find_first_not_of("0123456789") != std::string::npos) {
    throw_parameter("bad address '" + text + "'");
  }
  const unsigned long p = std::stoul(port);
  if (p > 65535) throw_parameter("port out of range in '" + text + "'");
  a.port = static_cast<std::uint16_t>(p);
  return a;
}

std::string to_string(const Address& addr) {
  return addr.host + ":" + std::to_string(addr.port);
}

// ---- server ----------------------------------------------------------------

TcpServer::TcpServer(Service& service, const Address& addr) : service_(service) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw_io("socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa = resolve(addr);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    ::close(listen_fd_);
    throw_io("bind " + to_string(addr));
  }
  if (::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    throw_io("listen");
  }
  socklen_t len = sizeof sa;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
  acceptor_ = std::thread([this] { run(); });
}

void TcpServer::run() {
  while (!stopping_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listening socket shut down
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(conn_mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void TcpServer::serve_connection(int fd) {
  try {
    while (auto frame = read_frame(fd)) {
      wire::Message reply;
      try {
        reply = service_.handle(wire::decode_frame(*frame));
      } catch (const Error& e) {
        reply = wire::encode(wire::ErrorMsg{service_.role(), e.kind(), e.what()});
      }
      write_all(fd, wire::encode_frame(reply));
    }
  } catch (const std::exception&) {
    // peer vanished or sent garbage framing; drop the connection
  }
  ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> workers;
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  for (int fd : open_fds_) ::close(fd);
  open_fds_.clear();
}

// ---- client ----------------------------------------------------------------

TcpEndpoint::TcpEndpoint(Address addr) : addr_(std::move(addr)) {}

TcpEndpoint::~TcpEndpoint() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpEndpoint::connect_once() {
  if (fd_ >= 0) return;
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw_io("socket");
  sockaddr_in sa = resolve(addr_);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    ::close(fd);
    throw_io("connect " + to_string(addr_));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  fd_ = fd;
}

wire::Message TcpEndpoint::call(const wire::Message& request) {
  std::lock_guard lock(mu_);
  connect_once();
  try {
    write_all(fd_, wire::encode_frame(request));
    auto frame = read_frame(fd_);
    if (!frame) throw Error(ErrorKind::Io, "server closed the connection");
    return wire::decode_frame(*frame);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) {
      ::close(fd_);
      fd_ = -1;
    }
    throw;
  }
}

}  // namespace pmcdb
