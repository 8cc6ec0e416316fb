#include "net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <system_error>

namespace unitor::net {
namespace {

constexpr auto kPollSlice = std::chrono::milliseconds(50);

[[noreturn]] void throw_errno(const char* what) { throw std::system_error(errno, std::generic_category(), what); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string h = (host.empty() || host == "localhost") ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) == 1) return addr;

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
    throw std::system_error(std::make_error_code(std::errc::host_unreachable), "resolve " + h);
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket listen_tcp(const std::string& host, std::uint16_t port) {
  const auto addr = resolve(host, port);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw_errno("socket");
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) throw_errno("bind");
  if (::listen(s.fd(), 64) != 0) throw_errno("listen");
  return s;
}

std::uint16_t local_port(const Socket& socket) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(socket.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) throw_errno("getsockname");
  return ntohs(addr.sin_port);
}

Socket connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
  const auto addr = resolve(host, port);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!s.valid()) throw_errno("socket");
  if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    if (errno != EINPROGRESS) throw_errno("connect");
    pollfd p{s.fd(), POLLOUT, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc == 0) throw std::system_error(std::make_error_code(std::errc::timed_out), "connect");
    if (rc < 0) throw_errno("poll");
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw std::system_error(err, std::generic_category(), "connect");
  }
  const int flags = ::fcntl(s.fd(), F_GETFL);
  ::fcntl(s.fd(), F_SETFL, flags & ~O_NONBLOCK);
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

std::optional<std::string> LineChannel::read_line(std::chrono::milliseconds timeout,
                                                  const std::function<bool()>& abort) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (buffer_.size() > kMaxLine) return std::nullopt;
    if (abort && abort()) return std::nullopt;
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return std::nullopt;

    const auto slice = std::min<std::chrono::milliseconds>(
        kPollSlice, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now) +
                        std::chrono::milliseconds(1));
    pollfd p{socket_.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(slice.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    if (rc == 0) continue;
    char chunk[4096];
    const auto n = ::recv(socket_.fd(), chunk, sizeof(chunk), 0);
    if (n <= 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

bool LineChannel::write_raw(std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(socket_.fd(), data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

bool LineChannel::write_line(std::string_view line) {
  std::string out;
  out.reserve(line.size() + 2);
  out.append(line);
  out.append("\r\n");
  return write_raw(out);
}

LineServer::LineServer(const std::string& host, std::uint16_t port, Handler handler)
    : listener_(listen_tcp(host, port)), port_(local_port(listener_)), handler_(std::move(handler)) {
  acceptor_ = std::jthread([this](std::stop_token st) { accept_loop(st); });
}

void LineServer::accept_loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    pollfd p{listener_.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(kPollSlice.count()));
    reap(false);
    if (rc <= 0) continue;
    const int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

    auto session = std::make_unique<Session>();
    auto* raw = session.get();
    std::lock_guard lock(sessions_mutex_);
    sessions_.push_back(std::move(session));
    raw->thread = std::jthread([this, raw, fd](std::stop_token st) {
      LineChannel channel{Socket(fd)};
      try {
        handler_(channel, st);
      } catch (...) {
        // A failing session must not take the server down.
      }
      raw->done = true;
    });
  }
}

void LineServer::reap(bool all) {
  std::list<std::unique_ptr<Session>> finished;
  {
    std::lock_guard lock(sessions_mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (all || (*it)->done) {
        finished.push_back(std::move(*it));
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& s : finished) {
    s->thread.request_stop();
    if (s->thread.joinable()) s->thread.join();
  }
}

void LineServer::stop() {
  std::call_once(stopped_, [this] {
    acceptor_.request_stop();
    if (acceptor_.joinable()) acceptor_.join();
    listener_.close();
    reap(true);
  });
}

}  // namespace unitor::net
