#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <cstring>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Minimal MQTT 3.1.1 client: CONNECT/CONNACK, QoS 0/1 PUBLISH with PUBACK,
// SUBSCRIBE/SUBACK, PING and DISCONNECT. Blocking sockets with per-call
// timeouts; reconnect policy lives with the callers.

namespace hh::mqtt {

enum PacketType : std::uint8_t {
  kConnect = 1,
  kConnack = 2,
  kPublish = 3,
  kPuback = 4,
  kSubscribe = 8,
  kSuback = 9,
  kUnsubscribe = 10,
  kPingreq = 12,
  kPingresp = 13,
  kDisconnect = 14,
};

struct Url {
  std::string host;
  int port = 1883;
};

// Accepts "mqtt://host:port", "tcp://host:port" or plain "host:port".
inline std::optional<Url> parse_url(std::string_view s) {
  auto scheme = s.find("://");
  if (scheme != std::string_view::npos) {
    auto proto = s.substr(0, scheme);
    if (proto != "mqtt" && proto != "tcp") return std::nullopt;
    s = s.substr(scheme + 3);
  }
  Url url;
  auto colon = s.rfind(':');
  if (colon == std::string_view::npos) {
    url.host = std::string(s);
  } else {
    url.host = std::string(s.substr(0, colon));
    auto port_sv = s.substr(colon + 1);
    int port = 0;
    for (char c : port_sv) {
      if (c < '0' || c > '9') return std::nullopt;
      port = port * 10 + (c - '0');
    }
    if (port <= 0 || port > 65535) return std::nullopt;
    url.port = port;
  }
  if (url.host.empty()) return std::nullopt;
  return url;
}

// MQTT topic filter matching with "+" and "#" wildcards.
inline bool topic_matches(std::string_view filter, std::string_view topic) {
  std::size_t fi = 0, ti = 0;
  while (fi < filter.size()) {
    auto f_end = filter.find('/', fi);
    if (f_end == std::string_view::npos) f_end = filter.size();
    auto level = filter.substr(fi, f_end - fi);
    if (level == "#") return true;
    auto t_end = topic.find('/', ti);
    if (t_end == std::string_view::npos) t_end = topic.size();
    if (ti > topic.size()) return false;
    auto t_level = topic.substr(ti, t_end - ti);
    if (level != "+" && level != t_level) return false;
    fi = f_end + 1;
    ti = t_end + 1;
    if (f_end == filter.size()) return t_end == topic.size();
    if (t_end == topic.size()) {
      // topic exhausted; only "...//#" style filters can still match
      return fi < filter.size() && filter.substr(fi) == "#";
    }
  }
  return ti >= topic.size();
}

// ---- wire helpers -------------------------------------------------------

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xff));
}

inline void put_string(std::string& out, std::string_view s) {
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.append(s.data(), s.size());
}

inline std::string make_packet(std::uint8_t first_byte, std::string_view body) {
  std::string out;
  out.push_back(static_cast<char>(first_byte));
  std::size_t len = body.size();
  do {
    std::uint8_t digit = len % 128;
    len /= 128;
    if (len > 0) digit |= 0x80;
    out.push_back(static_cast<char>(digit));
  } while (len > 0);
  out.append(body.data(), body.size());
  return out;
}

struct RawPacket {
  std::uint8_t type = 0;
  std::uint8_t flags = 0;
  std::string body;
};

// Cursor over a packet body.
class BodyReader {
 public:
  explicit BodyReader(const std::string& body) : body_(body) {}

  bool u16(std::uint16_t& v) {
    if (pos_ + 2 > body_.size()) return false;
    v = static_cast<std::uint16_t>(
        (static_cast<unsigned char>(body_[pos_]) << 8) |
        static_cast<unsigned char>(body_[pos_ + 1]));
    pos_ += 2;
    return true;
  }

  bool str(std::string& s) {
    std::uint16_t len;
    if (!u16(len)) return false;
    if (pos_ + len > body_.size()) return false;
    s = body_.substr(pos_, len);
    pos_ += len;
    return true;
  }

  bool u8(std::uint8_t& v) {
    if (pos_ >= body_.size()) return false;
    v = static_cast<std::uint8_t>(body_[pos_++]);
    return true;
  }

  std::string rest() const { return body_.substr(pos_); }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& body_;
  std::size_t pos_ = 0;
};

// ---- sockets ------------------------------------------------------------

class TcpConn {
 public:
  TcpConn() = default;
  explicit TcpConn(int fd) : fd_(fd) {}
  ~TcpConn() { close(); }
  TcpConn(const TcpConn&) = delete;
  TcpConn& operator=(const TcpConn&) = delete;
  TcpConn(TcpConn&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  TcpConn& operator=(TcpConn&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }

  bool connect(const std::string& host, int port, int timeout_ms) {
    close();
    struct addrinfo hints {};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    struct addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints,
                      &res) != 0) {
      return false;
    }
    for (auto* ai = res; ai; ai = ai->ai_next) {
      int fd = ::socket(ai->ai_family, SOCK_STREAM | SOCK_NONBLOCK, 0);
      if (fd < 0) continue;
      int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
      if (rc != 0 && errno == EINPROGRESS) {
        struct pollfd pfd {fd, POLLOUT, 0};
        if (::poll(&pfd, 1, timeout_ms) == 1) {
          int err = 0;
          socklen_t len = sizeof(err);
          ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
          rc = err == 0 ? 0 : -1;
        } else {
          rc = -1;
        }
      }
      if (rc == 0) {
        int flags = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &flags, sizeof(flags));
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    ::freeaddrinfo(res);
    return fd_ >= 0;
  }

  bool send_all(std::string_view data) {
    std::size_t done = 0;
    while (done < data.size()) {
      ssize_t n = ::send(fd_, data.data() + done, data.size() - done,
                         MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
          struct pollfd pfd {fd_, POLLOUT, 0};
          if (::poll(&pfd, 1, 5000) != 1) return false;
          continue;
        }
        return false;
      }
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

  // Reads one MQTT packet. nullopt on timeout or closed/broken connection;
  // `timed_out` distinguishes the two.
  std::optional<RawPacket> recv_packet(int timeout_ms, bool* timed_out = nullptr) {
    if (timed_out) *timed_out = false;
    std::uint8_t first;
    if (!read_byte(first, timeout_ms, timed_out)) return std::nullopt;
    std::size_t len = 0;
    std::size_t mult = 1;
    for (int i = 0; i < 4; ++i) {
      std::uint8_t d;
      if (!read_byte(d, timeout_ms, nullptr)) return std::nullopt;
      len += static_cast<std::size_t>(d & 0x7f) * mult;
      if (!(d & 0x80)) break;
      mult *= 128;
      if (i == 3) return std::nullopt;  // malformed varint
    }
    RawPacket pkt;
    pkt.type = first >> 4;
    pkt.flags = first & 0x0f;
    pkt.body.resize(len);
    std::size_t got = 0;
    while (got < len) {
      if (!wait_readable(timeout_ms, nullptr)) return std::nullopt;
      ssize_t n = ::recv(fd_, pkt.body.data() + got, len - got, 0);
      if (n <= 0) {
        if (n < 0 && errno == EINTR) continue;
        return std::nullopt;
      }
      got += static_cast<std::size_t>(n);
    }
    return pkt;
  }

  bool is_open() const { return fd_ >= 0; }
  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }
  void shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }
  int fd() const { return fd_; }

 private:
  bool wait_readable(int timeout_ms, bool* timed_out) {
    struct pollfd pfd {fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc == 1) return true;
    if (rc == 0 && timed_out) *timed_out = true;
    return false;
  }

  bool read_byte(std::uint8_t& out, int timeout_ms, bool* timed_out) {
    if (fd_ < 0) return false;
    if (!wait_readable(timeout_ms, timed_out)) return false;
    char c;
    ssize_t n = ::recv(fd_, &c, 1, 0);
    if (n != 1) return false;
    out = static_cast<std::uint8_t>(c);
    return true;
  }

  int fd_ = -1;
};

// ---- client -------------------------------------------------------------

struct Message {
  std::string topic;
  std::string payload;
  bool retain = false;
  std::uint8_t qos = 0;
  std::uint16_t packet_id = 0;
};

struct ClientOptions {
  std::string client_id;
  std::string username;
  std::string password;
  std::uint16_t keepalive_s = 60;
  int io_timeout_ms = 5000;
};

class Client {
 public:
  bool connect(const Url& url, const ClientOptions& opts) {
    opts_ = opts;
    inbound_.clear();
    if (!conn_.connect(url.host, url.port, opts.io_timeout_ms)) return false;

    std::string body;
    put_string(body, "MQTT");
    body.push_back(4);  // protocol level 3.1.1
    std::uint8_t flags = 0x02;  // clean session
    if (!opts.username.empty()) flags |= 0x80;
    if (!opts.password.empty()) flags |= 0x40;
    body.push_back(static_cast<char>(flags));
    put_u16(body, opts.keepalive_s);
    put_string(body, opts.client_id);
    if (!opts.username.empty()) put_string(body, opts.username);
    if (!opts.password.empty()) put_string(body, opts.password);
    if (!conn_.send_all(make_packet(kConnect << 4, body))) return false;

    auto pkt = wait_for(kConnack, 0);
    if (!pkt) return false;
    if (pkt->body.size() != 2 || pkt->body[1] != 0) return false;
    connected_ = true;
    return true;
  }

  bool connected() const { return connected_ && conn_.is_open(); }

  void disconnect() {
    if (connected_) {
      conn_.send_all(make_packet(kDisconnect << 4, ""));
    }
    conn_.close();
    connected_ = false;
  }

  void drop() {  // close without DISCONNECT (simulates a failure)
    conn_.close();
    connected_ = false;
  }

  bool publish_qos0(std::string_view topic, std::string_view payload,
                    bool retain = false) {
    if (!connected()) return false;
    std::string body;
    put_string(body, topic);
    body.append(payload.data(), payload.size());
    std::uint8_t first = (kPublish << 4) | (retain ? 0x01 : 0x00);
    return conn_.send_all(make_packet(first, body));
  }

  bool publish_qos1(std::string_view topic, std::string_view payload,
                    bool retain = false) {
    if (!connected()) return false;
    std::uint16_t pid = next_packet_id();
    std::string body;
    put_string(body, topic);
    put_u16(body, pid);
    body.append(payload.data(), payload.size());
    std::uint8_t first = (kPublish << 4) | 0x02 | (retain ? 0x01 : 0x00);
    if (!conn_.send_all(make_packet(first, body))) {
      connected_ = false;
      return false;
    }
    auto ack = wait_for(kPuback, pid);
    if (!ack) {
      connected_ = false;
      return false;
    }
    return true;
  }

  bool subscribe(std::string_view filter, std::uint8_t qos = 1) {
    if (!connected()) return false;
    std::uint16_t pid = next_packet_id();
    std::string body;
    put_u16(body, pid);
    put_string(body, filter);
    body.push_back(static_cast<char>(qos));
    if (!conn_.send_all(make_packet((kSubscribe << 4) | 0x02, body))) {
      connected_ = false;
      return false;
    }
    auto ack = wait_for(kSuback, pid);
    if (!ack) {
      connected_ = false;
      return false;
    }
    BodyReader r(ack->body);
    std::uint16_t got_pid;
    std::uint8_t rc = 0x80;
    if (!r.u16(got_pid) || !r.u8(rc) || rc == 0x80) return false;
    return true;
  }

  // Returns the next inbound message, if any arrives within the timeout.
  // QoS 1 messages are acknowledged before being returned.
  std::optional<Message> poll(int timeout_ms) {
    if (!inbound_.empty()) {
      Message m = std::move(inbound_.front());
      inbound_.pop_front();
      return m;
    }
    if (!connected()) return std::nullopt;
    bool timed_out = false;
    auto pkt = conn_.recv_packet(timeout_ms, &timed_out);
    if (!pkt) {
      if (!timed_out) connected_ = false;
      return std::nullopt;
    }
    handle_packet(*pkt);
    if (!inbound_.empty()) {
      Message m = std::move(inbound_.front());
      inbound_.pop_front();
      return m;
    }
    return std::nullopt;
  }

  bool ping() {
    if (!connected()) return false;
    return conn_.send_all(make_packet(kPingreq << 4, ""));
  }

 private:
  std::uint16_t next_packet_id() {
    if (++packet_id_ == 0) ++packet_id_;
    return packet_id_;
  }

  // Reads packets until one of `type` (and packet id, when applicable)
  // shows up. Inbound publishes encountered meanwhile are queued.
  std::optional<RawPacket> wait_for(std::uint8_t type, std::uint16_t pid) {
    for (int guard = 0; guard < 256; ++guard) {
      bool timed_out = false;
      auto pkt = conn_.recv_packet(opts_.io_timeout_ms, &timed_out);
      if (!pkt) {
        connected_ = false;
        return std::nullopt;
      }
      if (pkt->type == type) {
        if (type == kPuback || type == kSuback) {
          BodyReader r(pkt->body);
          std::uint16_t got;
          if (!r.u16(got) || got != pid) continue;
        }
        return pkt;
      }
      handle_packet(*pkt);
    }
    return std::nullopt;
  }

  void handle_packet(const RawPacket& pkt) {
    if (pkt.type == kPublish) {
      Message m;
      m.qos = (pkt.flags >> 1) & 0x03;
      m.retain = pkt.flags & 0x01;
      BodyReader r(pkt.body);
      if (!r.str(m.topic)) return;
      if (m.qos > 0) {
        if (!r.u16(m.packet_id)) return;
        std::string ack;
        put_u16(ack, m.packet_id);
        conn_.send_all(make_packet(kPuback << 4, ack));
      }
      m.payload = r.rest();
      inbound_.push_back(std::move(m));
    }
    // PINGRESP and anything else: nothing to do.
  }

  TcpConn conn_;
  ClientOptions opts_;
  bool connected_ = false;
  std::uint16_t packet_id_ = 0;
  std::deque<Message> inbound_;
};

}  // namespace hh::mqtt
