#pragma once

// Socket deployment: one role per listening server.

#include <atomic>
#include <cstdint>
#include <list>
#include <mutex>
#include <string>
#include <thread>

#include "pmcdb/transport.hpp"

namespace pmcdb {

struct Address {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// Parses "host:port" or a bare port.
Address parse_address(const std::string& text);
std::string to_string(const Address& addr);

class TcpServer {
 public:
  // Binds immediately; port 0 picks an ephemeral port.
  TcpServer(Service& service, const Address& addr);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  void start();  // accept loop on a background thread
  void run();    // accept loop on the calling thread, until stop()
  void stop();

 private:
  void serve_connection(int fd);

  Service& service_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex conn_mu_;
  std::list<std::thread> workers_;
  std::list<int> open_fds_;
};

// Keeps one connection open; calls are serialized.
class TcpEndpoint : public Endpoint {
 public:
  explicit TcpEndpoint(Address addr);
  ~TcpEndpoint() override;
  wire::Message call(const wire::Message& request) override;

 private:
  void connect_once();

  Address addr_;
  int fd_ = -1;
  std::mutex mu_;
};

}  // namespace pmcdb
