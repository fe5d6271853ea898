#pragma once

#include <span>
#include <string>

#include "tokengate/common/bytes.hpp"

namespace tokengate::control {

// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  // Unblocks readers in other threads without closing the descriptor.
  void shutdown() const;

 private:
  int fd_ = -1;
};

// All throw Error{Io}.
Socket listen_tcp(const std::string& host, int port);
int local_port(const Socket& socket);
// Waits up to timeout_ms; returns an invalid socket on timeout.
Socket accept_tcp(const Socket& listener, int timeout_ms);
Socket connect_tcp(const std::string& host, int port);
void send_all(const Socket& socket, ByteView bytes);
// Returns 0 at end of stream.
std::size_t recv_some(const Socket& socket, std::span<std::uint8_t> buffer);

}  // namespace tokengate::control
