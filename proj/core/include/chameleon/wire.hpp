#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "chameleon/station.hpp"

namespace chameleon::protocol {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kRecordsChunkSize = 4096;

// Coordinator <-> station message set. Assign carries exactly one station's
// policy; no message type can carry both stations' settings, so cross-station
// leakage is unrepresentable at the type level.

struct Hello {
    int role = 0;
    int protocol_version = kProtocolVersion;
};

struct Assign {
    std::uint64_t seed = 0;
    std::uint64_t n = 0;
    station::AnglePolicy policy;
};

struct RecordsChunk {
    std::vector<station::MeasurementRecord> records;
    bool last = false;
};

struct Ack {};

struct AbortRun {
    std::string reason;
};

using WireMessage = std::variant<Hello, Assign, RecordsChunk, Ack, AbortRun>;

/// JSON body of one message (no frame prefix). Deterministic field order.
std::string encode_message(const WireMessage& msg);

/// Throws ProtocolError on malformed bodies.
WireMessage decode_message(std::string_view body);

/// On the wire every message body is framed as a 32-bit big-endian length
/// followed by the body bytes; this returns those frame bytes.
std::vector<std::uint8_t> frame_bytes(std::string_view body);

/// A blocking, message-framed duplex channel. One send is one message body;
/// framing is a transport detail. receive returns nullopt on timeout or when
/// the peer has closed and no messages remain.
class Channel {
  public:
    virtual ~Channel() = default;
    virtual void send(std::string_view body) = 0;
    virtual std::optional<std::string> receive(std::chrono::milliseconds timeout) = 0;
};

/// Two ends of an in-memory channel carrying the same framed messages as the
/// TCP transport; used for fast in-process runs and tests.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_in_process_pair();

/// Wraps a channel and appends the exact wire bytes (length prefix + body)
/// of every outbound message to a log. The log is how tests prove that the
/// bytes sent to one station do not depend on the other station's settings.
class RecordingChannel : public Channel {
  public:
    RecordingChannel(Channel& inner, std::vector<std::uint8_t>& log)
        : inner_(inner), log_(log) {}

    void send(std::string_view body) override;
    std::optional<std::string> receive(std::chrono::milliseconds timeout) override;

  private:
    Channel& inner_;
    std::vector<std::uint8_t>& log_;
};

class TcpListener {
  public:
    /// Binds and listens; port 0 picks an ephemeral port. Throws ProtocolError.
    TcpListener(const std::string& host, std::uint16_t port);
    ~TcpListener();

    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }

    /// nullptr on timeout.
    std::unique_ptr<Channel> accept(std::chrono::milliseconds timeout);

  private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

/// Throws ProtocolError if the connection cannot be established in time.
std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port,
                                     std::chrono::milliseconds timeout);

}  // namespace chameleon::protocol
