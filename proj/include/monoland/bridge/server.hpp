#pragma once

// Session server: one thread and one Session per connection. Each
// connection speaks newline-delimited JSON over raw TCP, or the same
// messages as WebSocket text frames when it opens with an HTTP upgrade.

#include <monoland/bridge/session.hpp>
#include <monoland/bridge/websocket.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <list>
#include <string>
#include <thread>

namespace monoland::bridge {

struct BindAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;
};

inline BindAddress parse_bind(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw InvalidInput("bind address must be host:port");
  BindAddress b;
  b.host = s.substr(0, colon);
  try {
    const unsigned long p = std::stoul(s.substr(colon + 1));
    if (p > 65535) throw std::out_of_range("port");
    b.port = static_cast<std::uint16_t>(p);
  } catch (const std::logic_error&) {
    throw InvalidInput("bad port in bind address: " + s);
  }
  if (b.host.empty() || b.host == "*") b.host = "0.0.0.0";
  return b;
}

/// MONOLAND_BIND and MONOLAND_TICK_HZ override the config.
inline void apply_env_overrides(BridgeConfig& b) {
  if (const char* v = std::getenv("MONOLAND_BIND"); v && *v) b.bind = v;
  if (const char* v = std::getenv("MONOLAND_TICK_HZ"); v && *v) {
    try {
      b.tick_rate_hz = std::stod(v);
    } catch (const std::logic_error&) {
      throw InvalidInput(std::string("bad MONOLAND_TICK_HZ: ") + v);
    }
    require(b.tick_rate_hz > 0.0, "MONOLAND_TICK_HZ must be > 0");
  }
}

namespace server_detail {

inline bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

class Connection {
 public:
  Connection(int fd, Session session, double tick_hz) : fd_(fd), session_(std::move(session)), tick_hz_(tick_hz) {}

  void run(const std::atomic<bool>& stop) {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / tick_hz_));
    auto next = clock::now() + period;
    char chunk[4096];
    while (!stop.load() && alive_) {
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next - clock::now()).count();
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(std::max<long long>(0, std::min<long long>(wait, 100))));
      if (r > 0) {
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        in_.append(chunk, static_cast<std::size_t>(n));
        consume();
      } else if (r < 0 && errno != EINTR) {
        break;
      }
      const auto now = clock::now();
      if (now >= next) {
        send_messages(session_.tick());
        next += period;
        if (now - next > 10 * period) next = now + period;  // fell far behind; don't burst
      }
      if (session_.closed()) break;
    }
    ::close(fd_);
  }

 private:
  void consume() {
    if (mode_ == Mode::unknown) {
      if (in_.size() < 4) return;
      mode_ = in_.compare(0, 4, "GET ") == 0 ? Mode::http : Mode::tcp;
    }
    if (mode_ == Mode::http) {
      const auto end = in_.find("\r\n\r\n");
      if (end == std::string::npos) {
        if (in_.size() > 16384) alive_ = false;
        return;
      }
      const auto resp = ws::handshake_response(in_.substr(0, end));
      if (!resp) {
        send_all(fd_, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
        alive_ = false;
        return;
      }
      send_all(fd_, *resp);
      in_.erase(0, end + 4);
      mode_ = Mode::websocket;
    }
    if (mode_ == Mode::websocket) {
      try {
        while (auto f = ws::parse_frame(in_)) {
          switch (f->op) {
            case ws::Opcode::text:
            case ws::Opcode::binary:
            case ws::Opcode::continuation:
              fragment_ += f->payload;
              if (f->fin) {
                lines(fragment_ + "\n");
                fragment_.clear();
              }
              break;
            case ws::Opcode::ping: send_raw(ws::frame(ws::Opcode::pong, f->payload)); break;
            case ws::Opcode::close:
              send_raw(ws::frame(ws::Opcode::close, ""));
              alive_ = false;
              return;
            default: break;
          }
        }
      } catch (const std::exception&) {
        alive_ = false;
      }
      return;
    }
    const auto last = in_.rfind('\n');
    if (last == std::string::npos) {
      if (in_.size() > (1u << 24)) alive_ = false;
      return;
    }
    std::string complete = in_.substr(0, last + 1);
    in_.erase(0, last + 1);
    lines(complete);
  }

  void lines(const std::string& text) {
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(start, end - start);
      start = end + 1;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      send_messages(session_.handle(line));
      if (session_.closed()) {
        alive_ = false;
        return;
      }
    }
  }

  void send_messages(const std::vector<std::string>& msgs) {
    for (const auto& m : msgs) {
      if (mode_ == Mode::websocket)
        send_raw(ws::frame(ws::Opcode::text, m));
      else
        send_raw(m + "\n");
    }
  }

  void send_raw(const std::string& data) {
    if (!send_all(fd_, data)) alive_ = false;
  }

  enum class Mode { unknown, tcp, http, websocket };
  int fd_;
  Session session_;
  double tick_hz_;
  Mode mode_ = Mode::unknown;
  bool alive_ = true;
  std::string in_;
  std::string fragment_;
};

}  // namespace server_detail

class Server {
 public:
  Server(Config config, SessionAssets assets) : config_(std::move(config)), assets_(std::move(assets)) {
    const BindAddress b = parse_bind(config_.bridge.bind);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(b.port);
    if (::inet_pton(AF_INET, b.host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw InvalidInput("bind host must be an IPv4 address: " + b.host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw std::runtime_error("cannot listen on " + config_.bridge.bind + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  ~Server() {
    stop();
    for (auto& t : threads_)
      if (t.joinable()) t.join();
    if (fd_ >= 0) ::close(fd_);
  }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return port_; }
  void stop() { stop_.store(true); }

  /// Accepts connections until stop().
  void run() {
    while (!stop_.load()) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c < 0) continue;
      const int one = 1;
      ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      threads_.emplace_back([this, c] {
        try {
          server_detail::Connection conn(c, Session(config_, assets_), config_.bridge.tick_rate_hz);
          conn.run(stop_);
        } catch (const std::exception&) {
          ::close(c);
        }
      });
    }
  }

 private:
  Config config_;
  SessionAssets assets_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::list<std::thread> threads_;
};

}  // namespace monoland::bridge
