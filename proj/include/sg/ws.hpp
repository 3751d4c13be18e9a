#pragma once

// Hand-rolled RFC 6455 layer over POSIX sockets: URL parsing, SHA-1 for the
// handshake accept key, frame codec, client connect and server handshake.
// Built in-tree because the tests must drive protocol-violating peers (wrong
// payload types, withheld pongs), which packaged clients refuse to send.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sg/base64.hpp"
#include "sg/core.hpp"

namespace sg::ws {

// ---------------------------------------------------------------------------
// SHA-1 (needed only for the handshake; no crypto claims)

inline std::array<std::uint8_t, 20> sha1(std::span<const std::uint8_t> data) {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
  std::uint64_t ml = static_cast<std::uint64_t>(data.size()) * 8u;
  std::vector<std::uint8_t> msg(data.begin(), data.end());
  msg.push_back(0x80);
  while (msg.size() % 64 != 56) msg.push_back(0x00);
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<std::uint8_t>((ml >> (i * 8)) & 0xFF));

  auto rol = [](std::uint32_t v, int n) { return (v << n) | (v >> (32 - n)); };
  for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (static_cast<std::uint32_t>(msg[chunk + 4 * i]) << 24) |
             (static_cast<std::uint32_t>(msg[chunk + 4 * i + 1]) << 16) |
             (static_cast<std::uint32_t>(msg[chunk + 4 * i + 2]) << 8) |
             static_cast<std::uint32_t>(msg[chunk + 4 * i + 3]);
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      std::uint32_t tmp = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }
  std::array<std::uint8_t, 20> out;
  for (int i = 0; i < 5; ++i) {
    out[4 * i] = static_cast<std::uint8_t>(h[i] >> 24);
    out[4 * i + 1] = static_cast<std::uint8_t>(h[i] >> 16);
    out[4 * i + 2] = static_cast<std::uint8_t>(h[i] >> 8);
    out[4 * i + 3] = static_cast<std::uint8_t>(h[i]);
  }
  return out;
}

inline constexpr std::string_view kWsGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

inline std::string accept_key_for(const std::string& client_key) {
  std::string joined = client_key + std::string(kWsGuid);
  auto digest = sha1(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(joined.data()), joined.size()));
  return base64_encode(std::span<const std::uint8_t>(digest.data(), digest.size()));
}

// ---------------------------------------------------------------------------
// URLs

struct WsUrl {
  std::string scheme;  // "ws" or "wss"
  std::string host;
  int port = 80;
  std::string path = "/";
};

/// Accepts ws:// and wss:// URLs with host, optional port and path.
/// Throws BadUrl for anything else.
inline WsUrl parse_ws_url(const std::string& url) {
  WsUrl out;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Err::BadUrl, "no scheme in '" + url + "'");
  out.scheme = url.substr(0, scheme_end);
  if (out.scheme != "ws" && out.scheme != "wss")
    throw Error(Err::BadUrl, "scheme must be ws or wss: '" + url + "'");
  out.port = out.scheme == "ws" ? 80 : 443;

  std::string rest = url.substr(scheme_end + 3);
  auto path_start = rest.find('/');
  std::string authority = path_start == std::string::npos ? rest : rest.substr(0, path_start);
  if (path_start != std::string::npos) out.path = rest.substr(path_start);
  if (authority.empty()) throw Error(Err::BadUrl, "missing host in '" + url + "'");

  auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    std::string port_str = authority.substr(colon + 1);
    if (port_str.empty()) throw Error(Err::BadUrl, "empty port in '" + url + "'");
    for (char c : port_str)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw Error(Err::BadUrl, "non-numeric port in '" + url + "'");
    long p = std::strtol(port_str.c_str(), nullptr, 10);
    if (p < 1 || p > 65535) throw Error(Err::BadUrl, "port out of range in '" + url + "'");
    out.port = static_cast<int>(p);
    out.host = authority.substr(0, colon);
  } else {
    out.host = authority;
  }
  if (out.host.empty()) throw Error(Err::BadUrl, "missing host in '" + url + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Sockets

namespace detail {

inline std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace detail

/// Move-only RAII fd with poll-based timeouts.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  static Socket connect_tcp(const std::string& host, int port, int timeout_ms) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
    if (rc != 0) throw Error(Err::Transport, "resolve '" + host + "': " + gai_strerror(rc));

    int last_errno = 0;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) {
        last_errno = errno;
        continue;
      }
      int flags = ::fcntl(fd, F_GETFL, 0);
      ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
      rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
      if (rc != 0 && errno == EINPROGRESS) {
        pollfd pfd{fd, POLLOUT, 0};
        int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr == 0) {
          ::close(fd);
          ::freeaddrinfo(res);
          throw Error(Err::Timeout, "connect to " + host + ":" + std::to_string(port) + " timed out");
        }
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      }
      if (rc == 0) {
        ::fcntl(fd, F_SETFL, flags);  // back to blocking
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        ::freeaddrinfo(res);
        return Socket(fd);
      }
      last_errno = errno;
      ::close(fd);
    }
    ::freeaddrinfo(res);
    if (last_errno == ECONNREFUSED)
      throw Error(Err::Refused, host + ":" + std::to_string(port) + " refused the connection");
    throw Error(Err::Transport,
                "connect to " + host + ":" + std::to_string(port) + ": " + std::strerror(last_errno));
  }

  void send_all(const std::uint8_t* data, std::size_t size) {
    std::size_t sent = 0;
    while (sent < size) {
      ssize_t n = ::send(fd_, data + sent, size - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Err::Transport, std::string("send: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  /// Ready-to-read poll; false on timeout.
  bool readable(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc < 0) throw Error(Err::Transport, std::string("poll: ") + std::strerror(errno));
    return rc > 0;
  }

  /// Reads up to `size` bytes; 0 means the peer closed. Waits at most
  /// timeout_ms for readability and throws Timeout otherwise.
  std::size_t recv_some(std::uint8_t* data, std::size_t size, int timeout_ms) {
    if (!readable(timeout_ms)) throw Error(Err::Timeout, "no data within the window");
    ssize_t n = ::recv(fd_, data, size, 0);
    if (n < 0) throw Error(Err::Transport, std::string("recv: ") + std::strerror(errno));
    return static_cast<std::size_t>(n);
  }

 private:
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Frames

enum class Opcode : std::uint8_t {
  Continuation = 0x0,
  Text = 0x1,
  Binary = 0x2,
  Close = 0x8,
  Ping = 0x9,
  Pong = 0xA,
};

struct Frame {
  Opcode opcode = Opcode::Text;
  std::vector<std::uint8_t> payload;

  std::string_view text() const {
    return {reinterpret_cast<const char*>(payload.data()), payload.size()};
  }
};

inline constexpr std::size_t kMaxFramePayload = 16u * 1024u * 1024u;

/// Frame reader/writer over one socket. `mask_outgoing` follows the RFC:
/// true on the client side, false on the server side; incoming frames must
/// be masked the opposite way or the peer violated the protocol.
class FrameIO {
 public:
  FrameIO(Socket sock, bool mask_outgoing, std::vector<std::uint8_t> initial = {})
      : sock_(std::move(sock)), mask_(mask_outgoing), buf_(std::move(initial)) {}

  Socket& socket() { return sock_; }

  void write_frame(Opcode op, std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> frame;
    frame.reserve(payload.size() + 14);
    frame.push_back(static_cast<std::uint8_t>(0x80 | static_cast<std::uint8_t>(op)));
    std::uint8_t mask_bit = mask_ ? 0x80 : 0x00;
    if (payload.size() < 126) {
      frame.push_back(static_cast<std::uint8_t>(mask_bit | payload.size()));
    } else if (payload.size() <= 0xFFFF) {
      frame.push_back(static_cast<std::uint8_t>(mask_bit | 126));
      frame.push_back(static_cast<std::uint8_t>(payload.size() >> 8));
      frame.push_back(static_cast<std::uint8_t>(payload.size() & 0xFF));
    } else {
      frame.push_back(static_cast<std::uint8_t>(mask_bit | 127));
      std::uint64_t len = payload.size();
      for (int i = 7; i >= 0; --i) frame.push_back(static_cast<std::uint8_t>((len >> (i * 8)) & 0xFF));
    }
    if (mask_) {
      std::uint32_t key = next_mask_key();
      std::uint8_t kb[4] = {static_cast<std::uint8_t>(key >> 24), static_cast<std::uint8_t>(key >> 16),
                            static_cast<std::uint8_t>(key >> 8), static_cast<std::uint8_t>(key)};
      frame.insert(frame.end(), kb, kb + 4);
      std::size_t offset = frame.size();
      frame.insert(frame.end(), payload.begin(), payload.end());
      for (std::size_t i = 0; i < payload.size(); ++i) frame[offset + i] ^= kb[i % 4];
    } else {
      frame.insert(frame.end(), payload.begin(), payload.end());
    }
    sock_.send_all(frame.data(), frame.size());
  }

  void write_text(std::string_view s) {
    write_frame(Opcode::Text,
                {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }
  void write_binary(std::span<const std::uint8_t> b) { write_frame(Opcode::Binary, b); }
  void write_ping(std::span<const std::uint8_t> b = {}) { write_frame(Opcode::Ping, b); }
  void write_pong(std::span<const std::uint8_t> b) { write_frame(Opcode::Pong, b); }

  void write_close(std::uint16_t code = 1000) {
    std::uint8_t body[2] = {static_cast<std::uint8_t>(code >> 8),
                            static_cast<std::uint8_t>(code & 0xFF)};
    write_frame(Opcode::Close, body);
  }

  /// Next complete frame, or nullopt when the peer closed the TCP stream.
  /// The deadline covers the whole frame. Fragmented messages and other
  /// malformed input throw ProtocolViolation; we never send fragments and
  /// reject receiving them by contract.
  std::optional<Frame> read_frame(int timeout_ms) {
    std::int64_t deadline = detail::steady_ms() + timeout_ms;
    std::uint8_t hdr[2];
    if (!read_exact(hdr, 2, deadline)) return std::nullopt;

    bool fin = hdr[0] & 0x80;
    if (hdr[0] & 0x70) throw Error(Err::ProtocolViolation, "nonzero RSV bits");
    auto opcode = static_cast<Opcode>(hdr[0] & 0x0F);
    bool masked = hdr[1] & 0x80;
    std::uint64_t len = hdr[1] & 0x7F;

    bool control = static_cast<std::uint8_t>(opcode) >= 0x8;
    if (!fin || opcode == Opcode::Continuation)
      throw Error(Err::ProtocolViolation, "fragmented frames are not part of this protocol");
    if (control && len > 125) throw Error(Err::ProtocolViolation, "oversized control frame");

    if (len == 126) {
      std::uint8_t ext[2];
      if (!read_exact(ext, 2, deadline)) throw Error(Err::Transport, "eof inside frame header");
      len = (static_cast<std::uint64_t>(ext[0]) << 8) | ext[1];
    } else if (len == 127) {
      std::uint8_t ext[8];
      if (!read_exact(ext, 8, deadline)) throw Error(Err::Transport, "eof inside frame header");
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | ext[i];
    }
    if (len > kMaxFramePayload) throw Error(Err::ProtocolViolation, "frame too large");

    std::uint8_t mask_key[4] = {0, 0, 0, 0};
    if (masked) {
      if (!read_exact(mask_key, 4, deadline)) throw Error(Err::Transport, "eof inside mask key");
    }
    if (masked == mask_)
      throw Error(Err::ProtocolViolation,
                  mask_ ? "server frames must not be masked" : "client frames must be masked");

    Frame frame;
    frame.opcode = opcode;
    frame.payload.resize(len);
    if (len > 0 && !read_exact(frame.payload.data(), len, deadline))
      throw Error(Err::Transport, "eof inside frame payload");
    if (masked)
      for (std::size_t i = 0; i < frame.payload.size(); ++i) frame.payload[i] ^= mask_key[i % 4];
    return frame;
  }

  /// Any buffered or socket-pending input? Non-blocking when timeout is 0.
  bool input_pending(int timeout_ms) {
    return !buf_.empty() || sock_.readable(timeout_ms);
  }

 private:
  // Fills `out` from the buffer + socket; false when the peer closed before
  // the first byte. EOF mid-read is the caller's error case.
  bool read_exact(std::uint8_t* out, std::size_t n, std::int64_t deadline) {
    std::size_t have = 0;
    while (have < n) {
      if (!buf_.empty()) {
        std::size_t take = std::min(n - have, buf_.size() - buf_pos_);
        std::memcpy(out + have, buf_.data() + buf_pos_, take);
        have += take;
        buf_pos_ += take;
        if (buf_pos_ == buf_.size()) {
          buf_.clear();
          buf_pos_ = 0;
        }
        continue;
      }
      int remaining = static_cast<int>(deadline - detail::steady_ms());
      if (remaining < 0) remaining = 0;
      std::uint8_t chunk[4096];
      std::size_t got = sock_.recv_some(chunk, sizeof(chunk), remaining);
      if (got == 0) return have == 0 ? false : throw Error(Err::Transport, "peer closed mid-frame");
      buf_.assign(chunk, chunk + got);
      buf_pos_ = 0;
    }
    return true;
  }

  static std::uint32_t next_mask_key() {
    static thread_local std::mt19937 gen{std::random_device{}()};
    return gen();
  }

  Socket sock_;
  bool mask_ = false;
  std::vector<std::uint8_t> buf_;
  std::size_t buf_pos_ = 0;
};

// ---------------------------------------------------------------------------
// Handshakes

/// Client side: TCP connect plus HTTP upgrade. Throws BadUrl/Refused/Timeout/
/// Transport. A non-101 response is surfaced as Refused with the status line.
inline FrameIO connect(const WsUrl& url, int timeout_ms) {
  if (url.scheme == "wss")
    throw Error(Err::Transport, "wss:// endpoints are not supported; use ws://");
  Socket sock = Socket::connect_tcp(url.host, url.port, timeout_ms);

  std::mt19937 gen{std::random_device{}()};
  std::array<std::uint8_t, 16> nonce;
  for (auto& b : nonce) b = static_cast<std::uint8_t>(gen());
  std::string key = base64_encode(std::span<const std::uint8_t>(nonce.data(), nonce.size()));

  std::string req = "GET " + url.path + " HTTP/1.1\r\n" +
                    "Host: " + url.host + ":" + std::to_string(url.port) + "\r\n" +
                    "Upgrade: websocket\r\n" +
                    "Connection: Upgrade\r\n" +
                    "Sec-WebSocket-Key: " + key + "\r\n" +
                    "Sec-WebSocket-Version: 13\r\n\r\n";
  sock.send_all(reinterpret_cast<const std::uint8_t*>(req.data()), req.size());

  // Read the response head.
  std::string head;
  std::int64_t deadline = detail::steady_ms() + timeout_ms;
  while (head.find("\r\n\r\n") == std::string::npos) {
    if (head.size() > 64 * 1024) throw Error(Err::Transport, "oversized handshake response");
    int remaining = static_cast<int>(deadline - detail::steady_ms());
    if (remaining < 0) remaining = 0;
    std::uint8_t chunk[1024];
    std::size_t got = sock.recv_some(chunk, sizeof(chunk), remaining);
    if (got == 0) throw Error(Err::Transport, "peer closed during handshake");
    head.append(reinterpret_cast<const char*>(chunk), got);
  }

  auto line_end = head.find("\r\n");
  std::string status = head.substr(0, line_end);
  if (status.find(" 101 ") == std::string::npos && status.rfind(" 101") != status.size() - 4)
    throw Error(Err::Refused, "handshake rejected: " + status);

  // Verify the accept key (case-insensitive header match).
  std::string lower = head;
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto pos = lower.find("sec-websocket-accept:");
  if (pos == std::string::npos) throw Error(Err::ProtocolViolation, "missing Sec-WebSocket-Accept");
  auto val_start = head.find(':', pos) + 1;
  auto val_end = head.find("\r\n", val_start);
  std::string got_key = head.substr(val_start, val_end - val_start);
  while (!got_key.empty() && got_key.front() == ' ') got_key.erase(got_key.begin());
  while (!got_key.empty() && got_key.back() == ' ') got_key.pop_back();
  if (got_key != accept_key_for(key))
    throw Error(Err::ProtocolViolation, "Sec-WebSocket-Accept mismatch");

  // Bytes past the head already belong to the frame stream.
  std::size_t body_start = head.find("\r\n\r\n") + 4;
  std::vector<std::uint8_t> leftover(head.begin() + static_cast<std::ptrdiff_t>(body_start),
                                     head.end());
  return FrameIO(std::move(sock), /*mask_outgoing=*/true, std::move(leftover));
}

inline FrameIO connect(const std::string& url, int timeout_ms) {
  return connect(parse_ws_url(url), timeout_ms);
}

/// Server side: listening socket bound to host:port (port 0 = ephemeral).
class Listener {
 public:
  Listener(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw Error(Err::Bind, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      fd_ = -1;
      throw Error(Err::Bind, "bad listen address '" + host + "'");
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      int e = errno;
      ::close(fd_);
      fd_ = -1;
      throw Error(Err::Bind, "bind " + host + ":" + std::to_string(port) + ": " + std::strerror(e));
    }
    if (::listen(fd_, 8) != 0) {
      int e = errno;
      ::close(fd_);
      fd_ = -1;
      throw Error(Err::Bind, std::string("listen: ") + std::strerror(e));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  ~Listener() { close(); }
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  int port() const { return port_; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  /// Accepted connection or nullopt on timeout.
  std::optional<Socket> accept(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc < 0) throw Error(Err::Transport, std::string("poll: ") + std::strerror(errno));
    if (rc == 0) return std::nullopt;
    int client = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (client < 0) throw Error(Err::Transport, std::string("accept: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Socket(client);
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

/// Server side of the upgrade. Reads the HTTP request, validates it and
/// replies 101. Throws ProtocolViolation for non-WebSocket requests.
inline FrameIO accept_handshake(Socket sock, int timeout_ms) {
  std::string head;
  std::int64_t deadline = detail::steady_ms() + timeout_ms;
  while (head.find("\r\n\r\n") == std::string::npos) {
    if (head.size() > 64 * 1024) throw Error(Err::ProtocolViolation, "oversized handshake request");
    int remaining = static_cast<int>(deadline - detail::steady_ms());
    if (remaining < 0) remaining = 0;
    std::uint8_t chunk[1024];
    std::size_t got = sock.recv_some(chunk, sizeof(chunk), remaining);
    if (got == 0) throw Error(Err::Transport, "peer closed during handshake");
    head.append(reinterpret_cast<const char*>(chunk), got);
  }

  std::string lower = head;
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower.rfind("get ", 0) != 0 || lower.find("upgrade: websocket") == std::string::npos)
    throw Error(Err::ProtocolViolation, "not a websocket upgrade request");
  auto key_pos = lower.find("sec-websocket-key:");
  if (key_pos == std::string::npos) throw Error(Err::ProtocolViolation, "missing Sec-WebSocket-Key");
  auto val_start = head.find(':', key_pos) + 1;
  auto val_end = head.find("\r\n", val_start);
  std::string key = head.substr(val_start, val_end - val_start);
  while (!key.empty() && key.front() == ' ') key.erase(key.begin());
  while (!key.empty() && key.back() == ' ') key.pop_back();

  std::string resp = "HTTP/1.1 101 Switching Protocols\r\n"
                     "Upgrade: websocket\r\n"
                     "Connection: Upgrade\r\n"
                     "Sec-WebSocket-Accept: " + accept_key_for(key) + "\r\n\r\n";
  sock.send_all(reinterpret_cast<const std::uint8_t*>(resp.data()), resp.size());
  std::size_t body_start = head.find("\r\n\r\n") + 4;
  std::vector<std::uint8_t> leftover(head.begin() + static_cast<std::ptrdiff_t>(body_start),
                                     head.end());
  return FrameIO(std::move(sock), /*mask_outgoing=*/false, std::move(leftover));
}

/// One-line refusal for a second concurrent client.
inline void refuse_busy(Socket& sock) {
  static constexpr std::string_view resp =
      "HTTP/1.1 503 Service Unavailable\r\n"
      "Content-Length: 23\r\n"
      "Connection: close\r\n\r\n"
      "robot link is occupied\n";
  sock.send_all(reinterpret_cast<const std::uint8_t*>(resp.data()), resp.size());
}

}  // namespace sg::ws
