#include "fedboost/protocol/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace fedboost::protocol {

namespace {

// One direction of an in-memory pipe.
struct Channel {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> data;
  bool closed = false;
};

class PipeEnd final : public Connection {
 public:
  PipeEnd(std::shared_ptr<Channel> in, std::shared_ptr<Channel> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~PipeEnd() override { close(); }

  void write_all(std::span<const std::uint8_t> bytes) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw Error(ErrorCode::kConnectionClosed, "pipe closed");
    out_->data.insert(out_->data.end(), bytes.begin(), bytes.end());
    out_->cv.notify_all();
  }

  void read_exact(std::span<std::uint8_t> dst) override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return in_->data.size() >= dst.size() || in_->closed; });
    if (in_->data.size() < dst.size()) throw Error(ErrorCode::kConnectionClosed, "pipe closed");
    std::copy_n(in_->data.begin(), dst.size(), dst.begin());
    in_->data.erase(in_->data.begin(), in_->data.begin() + static_cast<std::ptrdiff_t>(dst.size()));
  }

  void close() override {
    for (auto* ch : {in_.get(), out_.get()}) {
      std::lock_guard lock(ch->mu);
      ch->closed = true;
      ch->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Channel> in_;
  std::shared_ptr<Channel> out_;
};

class TcpConnection final : public Connection {
 public:
  explicit TcpConnection(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpConnection() override {
    close();
    ::close(fd_);
  }

  void write_all(std::span<const std::uint8_t> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      auto n = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kConnectionClosed, fmt::format("send: {}", std::strerror(errno)));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  void read_exact(std::span<std::uint8_t> dst) override {
    std::size_t done = 0;
    while (done < dst.size()) {
      auto n = ::recv(fd_, dst.data() + done, dst.size() - done, 0);
      if (n == 0) throw Error(ErrorCode::kConnectionClosed, "peer closed the connection");
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kConnectionClosed, fmt::format("recv: {}", std::strerror(errno)));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  void close() override { ::shutdown(fd_, SHUT_RDWR); }

 private:
  int fd_;
};

sockaddr_in resolve(const Endpoint& where) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(where.port);
  if (::inet_pton(AF_INET, where.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(where.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorCode::kBadValue, fmt::format("cannot resolve host '{}'", where.host));
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

}  // namespace

std::pair<ConnectionPtr, ConnectionPtr> make_pipe_pair() {
  auto a = std::make_shared<Channel>();
  auto b = std::make_shared<Channel>();
  return {std::make_unique<PipeEnd>(a, b), std::make_unique<PipeEnd>(b, a)};
}

Endpoint parse_endpoint(std::string_view s) {
  auto colon = s.rfind(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::kBadValue, fmt::format("endpoint '{}' is not host:port", s));
  }
  Endpoint e;
  e.host = std::string(s.substr(0, colon));
  if (e.host.empty()) e.host = "0.0.0.0";
  auto port = s.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || ptr != port.data() + port.size() || value > 0xFFFF) {
    throw Error(ErrorCode::kBadValue, fmt::format("bad port in '{}'", s));
  }
  e.port = static_cast<std::uint16_t>(value);
  return e;
}

TcpListener::TcpListener(const Endpoint& where) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::kIoError, fmt::format("socket: {}", std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto addr = resolve(where);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 128) < 0) {
    auto msg = fmt::format("bind {}:{}: {}", where.host, where.port, std::strerror(errno));
    ::close(fd_);
    throw Error(ErrorCode::kIoError, msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

ConnectionPtr TcpListener::accept(std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  int ready;
  do {
    ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
  } while (ready < 0 && errno == EINTR);
  if (ready <= 0) throw Error(ErrorCode::kConnectionClosed, "timed out waiting for a connection");
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw Error(ErrorCode::kConnectionClosed, fmt::format("accept: {}", std::strerror(errno)));
  return std::make_unique<TcpConnection>(fd);
}

ConnectionPtr tcp_connect(const Endpoint& where, std::chrono::milliseconds timeout) {
  auto addr = resolve(where);
  auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(ErrorCode::kIoError, fmt::format("socket: {}", std::strerror(errno)));
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
      return std::make_unique<TcpConnection>(fd);
    }
    int err = errno;
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw Error(ErrorCode::kConnectionClosed,
                  fmt::format("connect {}:{}: {}", where.host, where.port, std::strerror(err)));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

void send_raw_frame(Connection& conn, std::span<const std::uint8_t> kind_and_body,
                    const WireOptions& opts) {
  if (kind_and_body.empty()) throw Error(ErrorCode::kMalformedFrame, "frame without a kind byte");
  if (kind_and_body.size() > opts.max_frame_size || kind_and_body.size() > UINT32_MAX) {
    throw Error(ErrorCode::kFrameTooLarge,
                fmt::format("frame of {} bytes exceeds the {}-byte limit", kind_and_body.size(),
                            opts.max_frame_size));
  }
  Bytes frame(4 + kind_and_body.size());
  const auto len = static_cast<std::uint32_t>(kind_and_body.size());
  std::memcpy(frame.data(), &len, 4);
  std::memcpy(frame.data() + 4, kind_and_body.data(), kind_and_body.size());
  conn.write_all(frame);
}

Bytes recv_raw_frame(Connection& conn, const WireOptions& opts) {
  std::uint8_t header[4];
  conn.read_exact(header);
  std::uint32_t len;
  std::memcpy(&len, header, 4);
  if (len == 0) throw Error(ErrorCode::kMalformedFrame, "zero-length frame");
  if (len > opts.max_frame_size) {
    throw Error(ErrorCode::kFrameTooLarge,
                fmt::format("incoming frame of {} bytes exceeds the {}-byte limit", len,
                            opts.max_frame_size));
  }
  Bytes body(len);
  conn.read_exact(body);
  return body;
}

void send_frame(Connection& conn, const Message& msg, const WireOptions& opts) {
  send_raw_frame(conn, encode_message(msg, opts.codec), opts);
}

Message recv_frame(Connection& conn, const WireOptions& opts) {
  return decode_message(recv_raw_frame(conn, opts), opts.codec);
}

}  // namespace fedboost::protocol
