#include "chameleon/wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include <nlohmann/json.hpp>

#include "chameleon/errors.hpp"
#include "chameleon/parse.hpp"

namespace chameleon::protocol {

using json = nlohmann::ordered_json;

namespace {

json policy_to_json(const station::AnglePolicy& policy) {
    return std::visit(
        [](const auto& p) -> json {
            using P = std::decay_t<decltype(p)>;
            json j;
            if constexpr (std::is_same_v<P, station::FixedPolicy>) {
                j["variant"] = "fixed";
                j["angle"] = p.angle.radians();
            } else if constexpr (std::is_same_v<P, station::SchedulePolicy>) {
                j["variant"] = "schedule";
                json ranges = json::array();
                for (const station::ScheduleRange& r : p.ranges) {
                    ranges.push_back({{"begin", r.begin}, {"end", r.end}, {"angle", r.angle.radians()}});
                }
                j["ranges"] = std::move(ranges);
            } else {
                j["variant"] = "seeded_random";
                json choices = json::array();
                for (model::Angle a : p.choices) {
                    choices.push_back(a.radians());
                }
                j["choices"] = std::move(choices);
                j["choice_seed"] = parse::format_seed_hex(p.choice_seed);
            }
            return j;
        },
        policy);
}

station::AnglePolicy policy_from_json(const json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "fixed") {
        return station::FixedPolicy{model::Angle(j.at("angle").get<double>())};
    }
    if (variant == "schedule") {
        std::vector<station::ScheduleRange> ranges;
        for (const json& r : j.at("ranges")) {
            ranges.push_back({r.at("begin").get<std::uint64_t>(), r.at("end").get<std::uint64_t>(),
                              model::Angle(r.at("angle").get<double>())});
        }
        return station::make_schedule(std::move(ranges));
    }
    if (variant == "seeded_random") {
        station::SeededRandomPolicy p;
        for (const json& a : j.at("choices")) {
            p.choices.emplace_back(a.get<double>());
        }
        p.choice_seed = parse::parse_seed(j.at("choice_seed").get<std::string>());
        return p;
    }
    throw ProtocolError("unknown policy variant '" + variant + "'");
}

}  // namespace

std::string encode_message(const WireMessage& msg) {
    json j = std::visit(
        [](const auto& m) -> json {
            using M = std::decay_t<decltype(m)>;
            json j;
            if constexpr (std::is_same_v<M, Hello>) {
                j["type"] = "hello";
                j["role"] = m.role;
                j["protocol_version"] = m.protocol_version;
            } else if constexpr (std::is_same_v<M, Assign>) {
                j["type"] = "assign";
                j["seed"] = parse::format_seed_hex(m.seed);
                j["n"] = m.n;
                j["policy"] = policy_to_json(m.policy);
            } else if constexpr (std::is_same_v<M, RecordsChunk>) {
                j["type"] = "records_chunk";
                j["last"] = m.last;
                json rows = json::array();
                for (const station::MeasurementRecord& r : m.records) {
                    rows.push_back({r.trial, r.setting, r.sign, r.weight});
                }
                j["records"] = std::move(rows);
            } else if constexpr (std::is_same_v<M, Ack>) {
                j["type"] = "ack";
            } else {
                j["type"] = "abort";
                j["reason"] = m.reason;
            }
            return j;
        },
        msg);
    return j.dump();
}

WireMessage decode_message(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed message body: ") + e.what());
    }
    try {
        const std::string type = j.at("type").get<std::string>();
        if (type == "hello") {
            return Hello{j.at("role").get<int>(), j.at("protocol_version").get<int>()};
        }
        if (type == "assign") {
            return Assign{parse::parse_seed(j.at("seed").get<std::string>()),
                          j.at("n").get<std::uint64_t>(), policy_from_json(j.at("policy"))};
        }
        if (type == "records_chunk") {
            RecordsChunk c;
            c.last = j.at("last").get<bool>();
            for (const json& row : j.at("records")) {
                station::MeasurementRecord r;
                r.trial = row.at(0).get<std::uint64_t>();
                r.setting = row.at(1).get<double>();
                r.sign = row.at(2).get<int>();
                r.weight = row.at(3).get<double>();
                c.records.push_back(r);
            }
            return c;
        }
        if (type == "ack") {
            return Ack{};
        }
        if (type == "abort") {
            return AbortRun{j.at("reason").get<std::string>()};
        }
        throw ProtocolError("unknown message type '" + type + "'");
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed message body: ") + e.what());
    }
}

std::vector<std::uint8_t> frame_bytes(std::string_view body) {
    const std::uint32_t n = static_cast<std::uint32_t>(body.size());
    std::vector<std::uint8_t> out;
    out.reserve(4 + body.size());
    out.push_back(static_cast<std::uint8_t>(n >> 24));
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

void RecordingChannel::send(std::string_view body) {
    const std::vector<std::uint8_t> frame = frame_bytes(body);
    log_.insert(log_.end(), frame.begin(), frame.end());
    inner_.send(body);
}

std::optional<std::string> RecordingChannel::receive(std::chrono::milliseconds timeout) {
    return inner_.receive(timeout);
}

// ---------------------------------------------------------------------------
// In-process transport
// ---------------------------------------------------------------------------

namespace {

struct InProcessQueue {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::string> messages;
    bool closed = false;
};

class InProcessChannel : public Channel {
  public:
    InProcessChannel(std::shared_ptr<InProcessQueue> rx, std::shared_ptr<InProcessQueue> tx)
        : rx_(std::move(rx)), tx_(std::move(tx)) {}

    ~InProcessChannel() override {
        for (const auto& q : {rx_, tx_}) {
            std::lock_guard lock(q->mutex);
            q->closed = true;
            q->cv.notify_all();
        }
    }

    void send(std::string_view body) override {
        std::lock_guard lock(tx_->mutex);
        if (tx_->closed) {
            throw ProtocolError("in-process channel closed");
        }
        tx_->messages.emplace_back(body);
        tx_->cv.notify_all();
    }

    std::optional<std::string> receive(std::chrono::milliseconds timeout) override {
        std::unique_lock lock(rx_->mutex);
        rx_->cv.wait_for(lock, timeout, [this] { return !rx_->messages.empty() || rx_->closed; });
        if (rx_->messages.empty()) {
            return std::nullopt;  // timeout or closed
        }
        std::string body = std::move(rx_->messages.front());
        rx_->messages.pop_front();
        return body;
    }

  private:
    std::shared_ptr<InProcessQueue> rx_;
    std::shared_ptr<InProcessQueue> tx_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_in_process_pair() {
    auto a_to_b = std::make_shared<InProcessQueue>();
    auto b_to_a = std::make_shared<InProcessQueue>();
    return {std::make_unique<InProcessChannel>(b_to_a, a_to_b),
            std::make_unique<InProcessChannel>(a_to_b, b_to_a)};
}

// ---------------------------------------------------------------------------
// TCP transport
// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

std::chrono::milliseconds remaining(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    return left.count() > 0 ? left : std::chrono::milliseconds(0);
}

/// poll() for readability/writability before the deadline.
bool wait_fd(int fd, short events, Clock::time_point deadline) {
    while (true) {
        pollfd p{fd, events, 0};
        const int ms = static_cast<int>(remaining(deadline).count());
        const int rc = ::poll(&p, 1, ms);
        if (rc > 0) {
            return true;
        }
        if (rc == 0) {
            return false;  // timeout
        }
        if (errno != EINTR) {
            throw ProtocolError(std::string("poll failed: ") + std::strerror(errno));
        }
    }
}

class TcpChannel : public Channel {
  public:
    explicit TcpChannel(int fd) : fd_(fd) {}

    ~TcpChannel() override {
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }

    void send(std::string_view body) override {
        const std::vector<std::uint8_t> frame = frame_bytes(body);
        std::size_t sent = 0;
        while (sent < frame.size()) {
            const ssize_t rc =
                ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
            if (rc < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw ProtocolError(std::string("send failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(rc);
        }
    }

    std::optional<std::string> receive(std::chrono::milliseconds timeout) override {
        const auto deadline = Clock::now() + timeout;
        std::uint8_t head[4];
        if (!read_exact(head, 4, deadline)) {
            return std::nullopt;
        }
        const std::uint32_t n = (std::uint32_t(head[0]) << 24) | (std::uint32_t(head[1]) << 16) |
                                (std::uint32_t(head[2]) << 8) | std::uint32_t(head[3]);
        if (n > kMaxFrame) {
            throw ProtocolError("frame too large: " + std::to_string(n));
        }
        std::string body(n, '\0');
        if (!read_exact(reinterpret_cast<std::uint8_t*>(body.data()), n, deadline)) {
            throw ProtocolError("connection closed mid-frame");
        }
        return body;
    }

  private:
    static constexpr std::uint32_t kMaxFrame = 64u * 1024u * 1024u;

    /// Reads exactly n bytes; false when the peer closed (or timed out)
    /// cleanly before the first byte.
    bool read_exact(std::uint8_t* dst, std::size_t n, Clock::time_point deadline) {
        std::size_t got = 0;
        while (got < n) {
            if (!wait_fd(fd_, POLLIN, deadline)) {
                if (got == 0) {
                    return false;
                }
                throw ProtocolError("timeout mid-frame");
            }
            const ssize_t rc = ::recv(fd_, dst + got, n - got, 0);
            if (rc == 0) {
                if (got == 0) {
                    return false;
                }
                throw ProtocolError("connection closed mid-frame");
            }
            if (rc < 0) {
                if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) {
                    continue;
                }
                throw ProtocolError(std::string("recv failed: ") + std::strerror(errno));
            }
            got += static_cast<std::size_t>(rc);
        }
        return true;
    }

    int fd_;
};

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        hostent* he = ::gethostbyname(host.c_str());
        if (he == nullptr || he->h_addrtype != AF_INET) {
            throw ProtocolError("cannot resolve host '" + host + "'");
        }
        std::memcpy(&addr.sin_addr, he->h_addr_list[0], sizeof(addr.sin_addr));
    }
    return addr;
}

}  // namespace

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) {
        throw ProtocolError(std::string("socket failed: ") + std::strerror(errno));
    }
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = resolve(host, port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        const std::string err = std::strerror(errno);
        ::close(fd_);
        fd_ = -1;
        throw ProtocolError("bind failed: " + err);
    }
    if (::listen(fd_, 8) < 0) {
        const std::string err = std::strerror(errno);
        ::close(fd_);
        fd_ = -1;
        throw ProtocolError("listen failed: " + err);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

std::unique_ptr<Channel> TcpListener::accept(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    if (!wait_fd(fd_, POLLIN, deadline)) {
        return nullptr;
    }
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) {
        throw ProtocolError(std::string("accept failed: ") + std::strerror(errno));
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<TcpChannel>(fd);
}

std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port,
                                     std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    const sockaddr_in addr = resolve(host, port);
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) {
        throw ProtocolError(std::string("socket failed: ") + std::strerror(errno));
    }
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    const int rc = ::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr));
    if (rc < 0 && errno != EINPROGRESS) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw ProtocolError("connect failed: " + err);
    }
    if (rc < 0) {
        if (!wait_fd(fd, POLLOUT, deadline)) {
            ::close(fd);
            throw ProtocolError("connect timed out");
        }
        int soerr = 0;
        socklen_t len = sizeof(soerr);
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &soerr, &len);
        if (soerr != 0) {
            ::close(fd);
            throw ProtocolError(std::string("connect failed: ") + std::strerror(soerr));
        }
    }
    ::fcntl(fd, F_SETFL, flags);
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<TcpChannel>(fd);
}

}  // namespace chameleon::protocol
