#pragma once

// Minimal POSIX TCP helpers.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace floc::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// "host:port"; host may be empty (meaning 0.0.0.0 when listening).
Endpoint parse_endpoint(std::string_view text);

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  ~Socket();
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept {
    const int f = fd_;
    fd_ = -1;
    return f;
  }
  void close() noexcept;
  /// Sends every byte or throws NetError.
  void send_all(std::string_view bytes) const;

 private:
  int fd_ = -1;
};

Socket connect_tcp(const Endpoint& ep);
/// Binds and listens; port 0 picks an ephemeral port.
Socket listen_tcp(const Endpoint& ep, int backlog = 64);
std::uint16_t local_port(const Socket& s);

}  // namespace floc::net
