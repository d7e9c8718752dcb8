#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "fedboost/protocol/message.hpp"

namespace fedboost::protocol {

inline constexpr std::size_t kDefaultMaxFrameSize = 32u << 20;
inline constexpr std::size_t kBaselineMaxFrameSize = 2u << 20;

// Reliable, ordered, full-duplex byte stream.
class Connection {
 public:
  virtual ~Connection() = default;

  /// Throws ConnectionClosed if the stream is gone.
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
  /// Blocks until `out` is filled; throws ConnectionClosed on EOF or reset.
  virtual void read_exact(std::span<std::uint8_t> out) = 0;
  /// Closes both directions. Blocked readers on either end wake up with ConnectionClosed.
  virtual void close() = 0;
};

using ConnectionPtr = std::unique_ptr<Connection>;

/// Two connected in-memory endpoints.
std::pair<ConnectionPtr, ConnectionPtr> make_pipe_pair();

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};
/// "host:port"; throws BadValue.
Endpoint parse_endpoint(std::string_view s);

class TcpListener {
 public:
  /// Port 0 binds an ephemeral port.
  explicit TcpListener(const Endpoint& where);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  /// Throws ConnectionClosed on timeout.
  ConnectionPtr accept(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Retries refused connections until `timeout` runs out.
ConnectionPtr tcp_connect(const Endpoint& where,
                          std::chrono::milliseconds timeout = std::chrono::seconds(10));

struct WireOptions {
  std::size_t max_frame_size = kDefaultMaxFrameSize;
  EnvelopeCodec codec = EnvelopeCodec::kCompact;
};

/// Frame: [length: u32 LE][kind: u8][body], length = body size + 1.
/// Oversize frames throw FrameTooLarge before anything is written.
void send_frame(Connection& conn, const Message& msg, const WireOptions& opts);
Message recv_frame(Connection& conn, const WireOptions& opts);

/// Raw variants working on kind+body bytes.
void send_raw_frame(Connection& conn, std::span<const std::uint8_t> kind_and_body,
                    const WireOptions& opts);
Bytes recv_raw_frame(Connection& conn, const WireOptions& opts);

}  // namespace fedboost::protocol
