#pragma once

// Small blocking TCP helpers shared by the SMTP/POP3 servers and clients.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

namespace unitor::net {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  /// Wakes any thread blocked on the socket.
  void shutdown();

 private:
  int fd_ = -1;
};

/// Throws std::system_error when the address cannot be bound.
Socket listen_tcp(const std::string& host, std::uint16_t port);
std::uint16_t local_port(const Socket& socket);
/// Throws std::system_error on failure or timeout.
Socket connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

/// CRLF line framing over a connected socket.
class LineChannel {
 public:
  static constexpr std::size_t kMaxLine = 8192;

  explicit LineChannel(Socket socket) : socket_(std::move(socket)) {}

  /// Reads one line without its terminator (CRLF or bare LF). nullopt on
  /// EOF, error, an overlong line, timeout, or when `abort` returns true
  /// while no complete line is buffered.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout,
                                       const std::function<bool()>& abort = {});
  /// Writes `line` followed by CRLF.
  bool write_line(std::string_view line);
  bool write_raw(std::string_view data);

  Socket& socket() { return socket_; }

 private:
  Socket socket_;
  std::string buffer_;
};

/// Accept loop that runs one thread per connection. Stopping closes the
/// listener, signals sessions through their stop_token and joins them.
class LineServer {
 public:
  using Handler = std::function<void(LineChannel&, std::stop_token)>;

  /// Throws std::system_error when the port cannot be bound.
  LineServer(const std::string& host, std::uint16_t port, Handler handler);
  ~LineServer() { stop(); }
  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  std::uint16_t port() const { return port_; }
  /// Idempotent.
  void stop();

 private:
  struct Session {
    std::jthread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop(std::stop_token stop);
  void reap(bool all);

  Socket listener_;
  std::uint16_t port_ = 0;
  Handler handler_;
  std::mutex sessions_mutex_;
  std::list<std::unique_ptr<Session>> sessions_;
  std::jthread acceptor_;
  std::once_flag stopped_;
};

}  // namespace unitor::net
