#pragma once

// Line-oriented ingress/egress endpoints: standard streams, files and plain
// TCP (one connection per direction, newline framing, no handshake).

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "kstream/errors.hpp"

namespace kstream {

class LineSource {
 public:
  virtual ~LineSource() = default;
  // Next record without its terminator; nullopt at end of stream.
  virtual std::optional<std::string> next() = 0;
  // Makes a blocked or future next() return nullopt. Callable from any thread.
  virtual void interrupt() {}
};

class LineSink {
 public:
  virtual ~LineSink() = default;
  virtual void write(std::string_view line) = 0;
  virtual void flush() {}
};

// In-memory endpoints, mostly for tests and embedding.
class VectorSource final : public LineSource {
 public:
  explicit VectorSource(std::vector<std::string> lines) : lines_(std::move(lines)) {}
  std::optional<std::string> next() override {
    if (stopped_ || pos_ >= lines_.size()) return std::nullopt;
    return lines_[pos_++];
  }
  void interrupt() override { stopped_ = true; }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
  std::atomic<bool> stopped_{false};
};

class StringSink final : public LineSink {
 public:
  void write(std::string_view line) override {
    out_.append(line);
    out_.push_back('\n');
  }
  const std::string& str() const noexcept { return out_; }

 private:
  std::string out_;
};

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd, bool owned = true) : fd_(fd), owned_(owned) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)), owned_(o.owned_) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
      owned_ = o.owned_;
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  void reset() {
    if (fd_ >= 0 && owned_) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
  bool owned_ = true;
};

inline std::string errno_text(const std::string& what) {
  return what + ": " + std::strerror(errno);
}

inline addrinfo* resolve(const std::string& host, const std::string& port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw IoError("resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  return res;
}

}  // namespace detail

// Reads newline-terminated records from a descriptor. Polls with a short
// timeout so interrupt() is honoured even while the peer is silent.
class FdLineSource final : public LineSource {
 public:
  explicit FdLineSource(detail::Fd fd, bool is_socket = false)
      : fd_(std::move(fd)), is_socket_(is_socket) {}

  std::optional<std::string> next() override {
    while (true) {
      if (auto nl = buf_.find('\n', scan_); nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        scan_ = 0;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      scan_ = buf_.size();
      if (eof_ || stop_) {
        if (stop_ || buf_.empty()) return std::nullopt;
        std::string line = std::move(buf_);
        buf_.clear();
        scan_ = 0;
        return line;
      }
      fill();
    }
  }

  void interrupt() override { stop_ = true; }

 private:
  void fill() {
    pollfd p{fd_.get(), POLLIN, 0};
    int rc = ::poll(&p, 1, 100);
    if (rc < 0) {
      if (errno == EINTR) return;
      throw IoError(detail::errno_text("poll"));
    }
    if (rc == 0) return;
    char chunk[64 * 1024];
    ssize_t n = ::read(fd_.get(), chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) return;
      throw IoError(detail::errno_text(is_socket_ ? "recv" : "read"));
    }
    if (n == 0) {
      eof_ = true;
      return;
    }
    buf_.append(chunk, static_cast<std::size_t>(n));
  }

  detail::Fd fd_;
  bool is_socket_;
  std::string buf_;
  std::size_t scan_ = 0;
  bool eof_ = false;
  std::atomic<bool> stop_{false};
};

class FdLineSink final : public LineSink {
 public:
  explicit FdLineSink(detail::Fd fd, bool is_socket = false)
      : fd_(std::move(fd)), is_socket_(is_socket) {}
  ~FdLineSink() override {
    try {
      flush();
    } catch (const IoError&) {
    }
  }

  void write(std::string_view line) override {
    buf_.append(line);
    buf_.push_back('\n');
    if (buf_.size() >= kFlushThreshold) flush();
  }

  void flush() override {
    std::size_t off = 0;
    while (off < buf_.size()) {
      ssize_t n = is_socket_ ? ::send(fd_.get(), buf_.data() + off, buf_.size() - off, MSG_NOSIGNAL)
                             : ::write(fd_.get(), buf_.data() + off, buf_.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        buf_.clear();
        throw IoError(detail::errno_text("write"));
      }
      off += static_cast<std::size_t>(n);
    }
    buf_.clear();
  }

 private:
  static constexpr std::size_t kFlushThreshold = 64 * 1024;
  detail::Fd fd_;
  bool is_socket_;
  std::string buf_;
};

// Bound listening socket. Port 0 picks an ephemeral port, see port().
class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port) {
    addrinfo* res = detail::resolve(host, std::to_string(port), true);
    std::string last_error = "no address";
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      detail::Fd s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
      if (s.get() < 0) continue;
      int one = 1;
      ::setsockopt(s.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      if (::bind(s.get(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.get(), 1) == 0) {
        fd_ = std::move(s);
        break;
      }
      last_error = std::strerror(errno);
    }
    ::freeaddrinfo(res);
    if (fd_.get() < 0) throw IoError("listen " + host + ":" + std::to_string(port) + ": " + last_error);
  }

  std::uint16_t port() const {
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&ss), &len);
    if (ss.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
    return ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
  }

  detail::Fd accept() {
    int c;
    do {
      c = ::accept(fd_.get(), nullptr, nullptr);
    } while (c < 0 && errno == EINTR);
    if (c < 0) throw IoError(detail::errno_text("accept"));
    return detail::Fd(c);
  }

 private:
  detail::Fd fd_;
};

inline detail::Fd tcp_connect(const std::string& host, std::uint16_t port) {
  addrinfo* res = detail::resolve(host, std::to_string(port), false);
  detail::Fd out;
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    detail::Fd s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (s.get() < 0) continue;
    if (::connect(s.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
      out = std::move(s);
      break;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  if (out.get() < 0) throw IoError("connect " + host + ":" + std::to_string(port) + ": " + last_error);
  return out;
}

// Endpoint grammar: stdin | stdout | file:<path> | tcp-listen:<host>:<port> | tcp:<host>:<port>
struct StdStream {
  friend bool operator==(const StdStream&, const StdStream&) = default;
};
struct FileEndpoint {
  std::string path;
  friend bool operator==(const FileEndpoint&, const FileEndpoint&) = default;
};
struct TcpListen {
  std::string host;
  std::uint16_t port = 0;
  friend bool operator==(const TcpListen&, const TcpListen&) = default;
};
struct TcpConnect {
  std::string host;
  std::uint16_t port = 0;
  friend bool operator==(const TcpConnect&, const TcpConnect&) = default;
};

enum class Direction { Ingress, Egress };

struct Endpoint {
  std::variant<StdStream, FileEndpoint, TcpListen, TcpConnect> kind;
  Direction direction = Direction::Ingress;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

inline Endpoint parse_endpoint(std::string_view spec, Direction dir) {
  auto host_port = [&](std::string_view rest) -> std::pair<std::string, std::uint16_t> {
    auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) throw ConfigError("endpoint '" + std::string(spec) + "': expected host:port");
    std::string host(rest.substr(0, colon));
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    std::string port_text(rest.substr(colon + 1));
    char* end = nullptr;
    long port = std::strtol(port_text.c_str(), &end, 10);
    if (port_text.empty() || *end != '\0' || port < 0 || port > 65535) {
      throw ConfigError("endpoint '" + std::string(spec) + "': bad port");
    }
    return {host, static_cast<std::uint16_t>(port)};
  };

  if (spec == "stdin" || spec == "stdout") {
    if ((spec == "stdin") != (dir == Direction::Ingress)) {
      throw ConfigError("endpoint '" + std::string(spec) + "' used in the wrong direction");
    }
    return {StdStream{}, dir};
  }
  if (spec.starts_with("file:")) {
    auto path = spec.substr(5);
    if (path.empty()) throw ConfigError("endpoint 'file:' needs a path");
    return {FileEndpoint{std::string(path)}, dir};
  }
  if (spec.starts_with("tcp-listen:")) {
    auto [h, p] = host_port(spec.substr(11));
    return {TcpListen{h, p}, dir};
  }
  if (spec.starts_with("tcp:")) {
    auto [h, p] = host_port(spec.substr(4));
    return {TcpConnect{h, p}, dir};
  }
  throw ConfigError("unknown endpoint '" + std::string(spec) + "'");
}

// Opening a tcp-listen endpoint blocks until the peer connects.
inline std::unique_ptr<LineSource> open_source(const Endpoint& ep) {
  return std::visit(
      [](const auto& k) -> std::unique_ptr<LineSource> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, StdStream>) {
          return std::make_unique<FdLineSource>(detail::Fd(STDIN_FILENO, false));
        } else if constexpr (std::is_same_v<K, FileEndpoint>) {
          int fd = ::open(k.path.c_str(), O_RDONLY | O_CLOEXEC);
          if (fd < 0) throw IoError(detail::errno_text("open " + k.path));
          return std::make_unique<FdLineSource>(detail::Fd(fd));
        } else if constexpr (std::is_same_v<K, TcpListen>) {
          TcpListener l(k.host, k.port);
          return std::make_unique<FdLineSource>(l.accept(), true);
        } else {
          return std::make_unique<FdLineSource>(tcp_connect(k.host, k.port), true);
        }
      },
      ep.kind);
}

inline std::unique_ptr<LineSink> open_sink(const Endpoint& ep) {
  return std::visit(
      [](const auto& k) -> std::unique_ptr<LineSink> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, StdStream>) {
          return std::make_unique<FdLineSink>(detail::Fd(STDOUT_FILENO, false));
        } else if constexpr (std::is_same_v<K, FileEndpoint>) {
          int fd = ::open(k.path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
          if (fd < 0) throw IoError(detail::errno_text("open " + k.path));
          return std::make_unique<FdLineSink>(detail::Fd(fd));
        } else if constexpr (std::is_same_v<K, TcpListen>) {
          TcpListener l(k.host, k.port);
          return std::make_unique<FdLineSink>(l.accept(), true);
        } else {
          return std::make_unique<FdLineSink>(tcp_connect(k.host, k.port), true);
        }
      },
      ep.kind);
}

}  // namespace kstream
