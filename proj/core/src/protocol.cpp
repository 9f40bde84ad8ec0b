#include "chameleon/protocol.hpp"

#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "chameleon/errors.hpp"
#include "chameleon/hash.hpp"
#include "chameleon/log.hpp"
#include "chameleon/parse.hpp"

namespace chameleon::protocol {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config (de)serialization
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) {
        config_fail(path + key, "missing field");
    }
    return *it;
}

double angle_from(const json& j, const std::string& path) {
    try {
        if (j.is_string()) {
            return parse::parse_angle(j.get<std::string>());
        }
        if (j.is_number()) {
            return j.get<double>();
        }
    } catch (const ParseError& e) {
        config_fail(path, e.what());
    }
    config_fail(path, "expected a number or an angle string");
}

std::uint64_t seed_from(const json& j, const std::string& path) {
    try {
        if (j.is_string()) {
            return parse::parse_seed(j.get<std::string>());
        }
        if (j.is_number_unsigned() || j.is_number_integer()) {
            return j.get<std::uint64_t>();
        }
    } catch (const ParseError& e) {
        config_fail(path, e.what());
    }
    config_fail(path, "expected an unsigned integer or a seed string");
}

json mode_to_json(const RunMode& mode) {
    return std::visit(
        [](const auto& m) -> json {
            using M = std::decay_t<decltype(m)>;
            json j;
            if constexpr (std::is_same_v<M, SingleMode>) {
                j["kind"] = "single";
                j["a"] = m.a.radians();
                j["b"] = m.b.radians();
            } else if constexpr (std::is_same_v<M, ChshMode>) {
                j["kind"] = "chsh";
                j["a"] = m.a.radians();
                j["a_prime"] = m.a_prime.radians();
                j["b"] = m.b.radians();
                j["b_prime"] = m.b_prime.radians();
                if (!m.boundaries.empty()) {
                    j["boundaries"] = m.boundaries;
                }
            } else {
                j["kind"] = "ekert";
                json set = json::array();
                for (model::Angle a : m.angle_set) {
                    set.push_back(a.radians());
                }
                j["angle_set"] = std::move(set);
                j["choice_seeds"] = {parse::format_seed_hex(m.choice_seed1),
                                     parse::format_seed_hex(m.choice_seed2)};
            }
            return j;
        },
        mode);
}

RunMode mode_from_json(const json& j) {
    const std::string path = "mode.";
    const json& kind_j = require(j, "kind", path);
    const std::string kind = kind_j.is_string() ? kind_j.get<std::string>() : "";
    if (kind == "single") {
        return SingleMode{model::Angle(angle_from(require(j, "a", path), "mode.a")),
                          model::Angle(angle_from(require(j, "b", path), "mode.b"))};
    }
    if (kind == "chsh") {
        ChshMode m{model::Angle(angle_from(require(j, "a", path), "mode.a")),
                   model::Angle(angle_from(require(j, "a_prime", path), "mode.a_prime")),
                   model::Angle(angle_from(require(j, "b", path), "mode.b")),
                   model::Angle(angle_from(require(j, "b_prime", path), "mode.b_prime")),
                   {}};
        if (j.contains("boundaries")) {
            for (const json& b : j["boundaries"]) {
                if (!b.is_number_unsigned() && !b.is_number_integer()) {
                    config_fail("mode.boundaries", "expected unsigned integers");
                }
                m.boundaries.push_back(b.get<std::uint64_t>());
            }
        }
        return m;
    }
    if (kind == "ekert") {
        EkertMode m;
        for (const json& a : require(j, "angle_set", path)) {
            m.angle_set.emplace_back(angle_from(a, "mode.angle_set[]"));
        }
        const json& seeds = require(j, "choice_seeds", path);
        if (!seeds.is_array() || seeds.size() != 2) {
            config_fail("mode.choice_seeds", "expected a pair of seeds");
        }
        m.choice_seed1 = seed_from(seeds[0], "mode.choice_seeds[0]");
        m.choice_seed2 = seed_from(seeds[1], "mode.choice_seeds[1]");
        return m;
    }
    config_fail("mode.kind", "expected one of 'single', 'chsh', 'ekert'");
}

json transport_to_json(const Transport& t) {
    return std::visit(
        [](const auto& tr) -> json {
            using T = std::decay_t<decltype(tr)>;
            json j;
            if constexpr (std::is_same_v<T, InProcessTransport>) {
                j["kind"] = "in-process";
            } else {
                j["kind"] = "tcp";
                j["host"] = tr.host;
                j["port"] = tr.port;
                j["timeout_ms"] = tr.timeout_ms;
            }
            return j;
        },
        t);
}

Transport transport_from_json(const json& j) {
    const json& kind_j = require(j, "kind", "transport.");
    const std::string kind = kind_j.is_string() ? kind_j.get<std::string>() : "";
    if (kind == "in-process") {
        return InProcessTransport{};
    }
    if (kind == "tcp") {
        TcpTransport t;
        if (j.contains("host")) {
            t.host = j["host"].get<std::string>();
        }
        if (j.contains("port")) {
            t.port = j["port"].get<std::uint16_t>();
        }
        if (j.contains("timeout_ms")) {
            t.timeout_ms = j["timeout_ms"].get<int>();
            if (t.timeout_ms <= 0) {
                config_fail("transport.timeout_ms", "must be positive");
            }
        }
        return t;
    }
    config_fail("transport.kind", "expected 'in-process' or 'tcp'");
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = parse::format_seed_hex(cfg.seed);
    j["n"] = cfg.n;
    j["mode"] = mode_to_json(cfg.mode);
    j["transport"] = transport_to_json(cfg.transport);
    j["output_dir"] = cfg.output_dir.string();
    return j;
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config: expected a JSON object");
    }
    RunConfig cfg;
    cfg.seed = seed_from(require(j, "seed", ""), "seed");
    const json& n = require(j, "n", "");
    if (!n.is_number_unsigned() && !n.is_number_integer()) {
        config_fail("n", "expected an unsigned integer");
    }
    cfg.n = n.get<std::uint64_t>();
    cfg.mode = mode_from_json(require(j, "mode", ""));
    if (j.contains("transport")) {
        cfg.transport = transport_from_json(j["transport"]);
    }
    if (j.contains("output_dir")) {
        cfg.output_dir = j["output_dir"].get<std::string>();
    }
    return cfg;
}

std::string iso_utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

RunConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::string canonical_config_text(const RunConfig& cfg) {
    return config_to_json(cfg).dump();
}

std::string run_id(const RunConfig& cfg) {
    json science;
    science["seed"] = parse::format_seed_hex(cfg.seed);
    science["n"] = cfg.n;
    science["mode"] = mode_to_json(cfg.mode);
    return hash::sha256_hex(science.dump()).substr(0, 12);
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

namespace {

std::pair<station::SchedulePolicy, station::SchedulePolicy> chsh_from_cuts(
    std::uint64_t n, model::Angle a, model::Angle a_prime, model::Angle b, model::Angle b_prime,
    std::uint64_t c1, std::uint64_t c2, std::uint64_t c3) {
    using station::ScheduleRange;
    // Station 1: a on ranges 1,2 and a' on 3,4; station 2: b on 1,3, b' on 2,4.
    auto p1 = station::make_schedule({ScheduleRange{0, c1, a}, ScheduleRange{c1, c2, a},
                                      ScheduleRange{c2, c3, a_prime}, ScheduleRange{c3, n, a_prime}});
    auto p2 = station::make_schedule({ScheduleRange{0, c1, b}, ScheduleRange{c1, c2, b_prime},
                                      ScheduleRange{c2, c3, b}, ScheduleRange{c3, n, b_prime}});
    return {std::move(p1), std::move(p2)};
}

}  // namespace

std::pair<station::SchedulePolicy, station::SchedulePolicy> chsh_schedule(
    std::uint64_t n, model::Angle a, model::Angle a_prime, model::Angle b, model::Angle b_prime) {
    if (n < 4) {
        throw ConfigError("chsh schedule requires n >= 4");
    }
    const std::uint64_t q = n / 4;  // remainder goes to the last range
    return chsh_from_cuts(n, a, a_prime, b, b_prime, q, 2 * q, 3 * q);
}

std::pair<station::SchedulePolicy, station::SchedulePolicy> chsh_schedule(
    std::uint64_t n, model::Angle a, model::Angle a_prime, model::Angle b, model::Angle b_prime,
    const std::vector<std::uint64_t>& boundaries) {
    if (boundaries.empty()) {
        return chsh_schedule(n, a, a_prime, b, b_prime);
    }
    if (boundaries.size() != 3) {
        throw ConfigError("chsh boundaries must list exactly 3 interior cut points");
    }
    if (!(boundaries[0] > 0 && boundaries[0] < boundaries[1] && boundaries[1] < boundaries[2] &&
          boundaries[2] < n)) {
        throw ConfigError("chsh boundaries must be strictly increasing inside (0, n)");
    }
    return chsh_from_cuts(n, a, a_prime, b, b_prime, boundaries[0], boundaries[1], boundaries[2]);
}

std::pair<station::AnglePolicy, station::AnglePolicy> ekert_policies(const EkertMode& mode) {
    if (mode.angle_set.empty()) {
        throw ConfigError("ekert mode requires a nonempty angle set");
    }
    if (mode.choice_seed1 == mode.choice_seed2) {
        throw ConfigError("ekert choice seeds must differ (choices must be independent)");
    }
    return {station::SeededRandomPolicy{mode.angle_set, mode.choice_seed1},
            station::SeededRandomPolicy{mode.angle_set, mode.choice_seed2}};
}

std::pair<station::AnglePolicy, station::AnglePolicy> policies_for(const RunConfig& cfg) {
    return std::visit(
        [&](const auto& m) -> std::pair<station::AnglePolicy, station::AnglePolicy> {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, SingleMode>) {
                return {station::FixedPolicy{m.a}, station::FixedPolicy{m.b}};
            } else if constexpr (std::is_same_v<M, ChshMode>) {
                auto [p1, p2] =
                    chsh_schedule(cfg.n, m.a, m.a_prime, m.b, m.b_prime, m.boundaries);
                return {std::move(p1), std::move(p2)};
            } else {
                return ekert_policies(m);
            }
        },
        cfg.mode);
}

// ---------------------------------------------------------------------------
// Station session
// ---------------------------------------------------------------------------

station::RecordSet run_station_session(Channel& channel, int role,
                                       std::chrono::milliseconds timeout) {
    channel.send(encode_message(Hello{role, kProtocolVersion}));

    std::optional<std::string> body = channel.receive(timeout);
    if (!body) {
        throw ProtocolError("station " + std::to_string(role) +
                            ": timeout waiting for assignment");
    }
    WireMessage msg = decode_message(*body);
    if (const auto* abort = std::get_if<AbortRun>(&msg)) {
        throw ProtocolError("station " + std::to_string(role) +
                            ": coordinator aborted: " + abort->reason);
    }
    const auto* assign = std::get_if<Assign>(&msg);
    if (assign == nullptr) {
        throw ProtocolError("station " + std::to_string(role) + ": expected assign message");
    }

    station::RecordSet rs = station::run_station(role, assign->seed, assign->n, assign->policy);

    const std::size_t total = rs.records.size();
    std::size_t sent = 0;
    do {
        const std::size_t count = std::min(kRecordsChunkSize, total - sent);
        RecordsChunk chunk;
        chunk.records.assign(rs.records.begin() + sent, rs.records.begin() + sent + count);
        sent += count;
        chunk.last = sent == total;
        channel.send(encode_message(chunk));
    } while (sent < total);

    body = channel.receive(timeout);
    if (!body) {
        throw ProtocolError("station " + std::to_string(role) + ": timeout waiting for ack");
    }
    msg = decode_message(*body);
    if (!std::holds_alternative<Ack>(msg)) {
        throw ProtocolError("station " + std::to_string(role) + ": expected ack");
    }
    return rs;
}

// ---------------------------------------------------------------------------
// Coordinator
// ---------------------------------------------------------------------------

namespace {

struct SessionResult {
    int role = 0;  // 0 until a valid hello arrived
    std::vector<station::MeasurementRecord> records;
    std::vector<std::uint8_t> sent_bytes;  // exact outbound wire bytes
    bool complete = false;
    std::string error;
};

/// One coordinator-side session: handshake, assign, collect, ack. It sees one
/// channel and the one policy selected by the hello's role; nothing belonging
/// to the other station enters this scope's outputs.
SessionResult serve_station(Channel& raw_channel, std::uint64_t seed, std::uint64_t n,
                            const station::AnglePolicy& policy1,
                            const station::AnglePolicy& policy2,
                            std::chrono::milliseconds timeout) {
    SessionResult result;
    RecordingChannel channel(raw_channel, result.sent_bytes);

    std::optional<std::string> body = channel.receive(timeout);
    if (!body) {
        result.error = "timeout waiting for hello";
        return result;
    }
    WireMessage msg;
    try {
        msg = decode_message(*body);
    } catch (const ProtocolError& e) {
        result.error = e.what();
        return result;
    }
    const auto* hello = std::get_if<Hello>(&msg);
    if (hello == nullptr) {
        result.error = "expected hello";
        return result;
    }
    if (hello->protocol_version != kProtocolVersion) {
        channel.send(encode_message(AbortRun{
            "protocol version mismatch: coordinator=" + std::to_string(kProtocolVersion) +
            " station=" + std::to_string(hello->protocol_version)}));
        result.error = "protocol version mismatch";
        return result;
    }
    if (hello->role != 1 && hello->role != 2) {
        channel.send(encode_message(AbortRun{"invalid role"}));
        result.error = "invalid role " + std::to_string(hello->role);
        return result;
    }
    result.role = hello->role;

    channel.send(encode_message(Assign{seed, n, hello->role == 1 ? policy1 : policy2}));

    while (true) {
        body = channel.receive(timeout);
        if (!body) {
            result.error = "timeout waiting for records";
            return result;
        }
        try {
            msg = decode_message(*body);
        } catch (const ProtocolError& e) {
            result.error = e.what();
            return result;
        }
        const auto* chunk = std::get_if<RecordsChunk>(&msg);
        if (chunk == nullptr) {
            result.error = "expected records chunk";
            return result;
        }
        result.records.insert(result.records.end(), chunk->records.begin(),
                              chunk->records.end());
        if (chunk->last) {
            break;
        }
    }
    channel.send(encode_message(Ack{}));
    result.complete = true;
    return result;
}

}  // namespace

RunArtifacts coordinate_run(const RunConfig& cfg,
                            const std::function<void(std::uint16_t)>& on_listening) {
    const auto [policy1, policy2] = policies_for(cfg);
    if (cfg.output_dir.empty()) {
        throw ConfigError("config: output_dir: missing field");
    }
    std::filesystem::create_directories(cfg.output_dir);

    RunArtifacts artifacts;
    artifacts.config = cfg;
    artifacts.id = run_id(cfg);
    artifacts.output_dir = cfg.output_dir;
    artifacts.record_paths = {cfg.output_dir / "station1.records",
                              cfg.output_dir / "station2.records"};
    artifacts.manifest_path = cfg.output_dir / "manifest.json";

    const std::string started = iso_utc_now();

    // Sessions slotted by the role each connection claimed in its hello.
    std::array<SessionResult, 2> sessions;
    std::array<bool, 2> session_seen{false, false};
    std::string failure;
    std::mutex state_mutex;

    auto deliver = [&](SessionResult r) {
        std::lock_guard lock(state_mutex);
        if (r.role == 1 || r.role == 2) {
            if (session_seen[r.role - 1]) {
                if (failure.empty()) {
                    failure = "duplicate role " + std::to_string(r.role);
                }
                return;
            }
            session_seen[r.role - 1] = true;
            sessions[r.role - 1] = std::move(r);
        } else if (failure.empty()) {
            failure = r.error.empty() ? "session failed" : r.error;
        }
    };

    if (std::holds_alternative<InProcessTransport>(cfg.transport)) {
        // Stations run as isolated tasks over the same framed message
        // contract as tcp mode; each owns one channel end and its role.
        const auto timeout = std::chrono::milliseconds(60000);
        auto [coord1, stat1] = make_in_process_pair();
        auto [coord2, stat2] = make_in_process_pair();

        std::thread station1([ch = std::move(stat1), timeout] {
            try {
                run_station_session(*ch, 1, timeout);
            } catch (const std::exception& e) {
                log::error(std::string("station 1: ") + e.what());
            }
        });
        std::thread station2([ch = std::move(stat2), timeout] {
            try {
                run_station_session(*ch, 2, timeout);
            } catch (const std::exception& e) {
                log::error(std::string("station 2: ") + e.what());
            }
        });

        std::thread serve1([&, ch = std::move(coord1)] {
            deliver(serve_station(*ch, cfg.seed, cfg.n, policy1, policy2, timeout));
        });
        std::thread serve2([&, ch = std::move(coord2)] {
            deliver(serve_station(*ch, cfg.seed, cfg.n, policy1, policy2, timeout));
        });
        serve1.join();
        serve2.join();
        station1.join();
        station2.join();
    } else {
        const auto& tcp = std::get<TcpTransport>(cfg.transport);
        const auto timeout = std::chrono::milliseconds(tcp.timeout_ms);
        TcpListener listener(tcp.host, tcp.port);
        log::info("coordinator listening on " + tcp.host + ":" + std::to_string(listener.port()));
        if (on_listening) {
            on_listening(listener.port());
        }
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        std::vector<std::thread> threads;
        std::vector<std::unique_ptr<Channel>> channels;
        // Accept up to two connections before the deadline; each session runs
        // on its own thread so a slow station cannot stall the other.
        for (int c = 0; c < 2; ++c) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            std::unique_ptr<Channel> ch =
                listener.accept(left.count() > 0 ? left : std::chrono::milliseconds(0));
            if (ch == nullptr) {
                std::lock_guard lock(state_mutex);
                if (failure.empty()) {
                    failure = "timeout waiting for station connections";
                }
                break;
            }
            channels.push_back(std::move(ch));
            Channel& ref = *channels.back();
            threads.emplace_back([&, ch_ptr = &ref] {
                deliver(serve_station(*ch_ptr, cfg.seed, cfg.n, policy1, policy2, timeout));
            });
        }
        for (std::thread& t : threads) {
            t.join();
        }
    }

    for (int role = 1; role <= 2; ++role) {
        if (!session_seen[role - 1]) {
            if (failure.empty()) {
                failure = "station " + std::to_string(role) + " never completed its handshake";
            }
        } else if (!sessions[role - 1].complete && failure.empty()) {
            failure = "station " + std::to_string(role) + ": " + sessions[role - 1].error;
        }
    }

    if (!failure.empty()) {
        artifacts.aborted = true;
        artifacts.abort_reason = failure;
    }
    for (int role = 1; role <= 2; ++role) {
        artifacts.bytes_sent[role - 1] = std::move(sessions[role - 1].sent_bytes);
    }

    // Persist whatever arrived; partial outputs are flagged, not discarded.
    json files = json::array();
    for (int role = 1; role <= 2; ++role) {
        station::RecordSet rs;
        rs.role = role;
        rs.seed = cfg.seed;
        rs.records = std::move(sessions[role - 1].records);

        std::ostringstream serialized;
        station::write_records(rs, serialized);
        const std::string payload = serialized.str();
        const std::string digest = hash::sha256_hex(payload);

        const std::filesystem::path& path = artifacts.record_paths[role - 1];
        {
            std::ofstream out(path, std::ios::binary);
            if (!out) {
                throw Error("cannot open for writing: " + path.string());
            }
            out << payload;
        }
        // The manifest hash is the integrity anchor for everything
        // downstream, so confirm the bytes actually on disk.
        if (hash::sha256_file_hex(path) != digest) {
            throw IntegrityError("hash mismatch on re-read: " + path.string());
        }

        FileEntry entry;
        entry.path = path.filename().string();
        entry.sha256 = digest;
        entry.records = rs.records.size();
        entry.partial = artifacts.aborted && rs.records.size() != cfg.n;
        artifacts.files[role - 1] = entry;
        files.push_back({{"path", entry.path},
                         {"sha256", entry.sha256},
                         {"records", entry.records},
                         {"partial", entry.partial}});
    }

    json manifest;
    manifest["run_id"] = artifacts.id;
    manifest["protocol_version"] = kProtocolVersion;
    manifest["config"] = json::parse(canonical_config_text(cfg));
    manifest["files"] = std::move(files);
    manifest["started"] = started;
    manifest["finished"] = iso_utc_now();
    manifest["aborted"] = artifacts.aborted;
    if (artifacts.aborted) {
        manifest["abort_reason"] = artifacts.abort_reason;
    }
    {
        std::ofstream out(artifacts.manifest_path, std::ios::binary);
        if (!out) {
            throw Error("cannot open for writing: " + artifacts.manifest_path.string());
        }
        out << manifest.dump(2) << '\n';
    }
    return artifacts;
}

}  // namespace chameleon::protocol
