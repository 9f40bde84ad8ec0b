#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chameleon/station.hpp"
#include "chameleon/wire.hpp"

namespace chameleon::protocol {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct SingleMode {
    model::Angle a, b;
};

struct ChshMode {
    model::Angle a, a_prime, b, b_prime;
    // Optional interior cut points c1 < c2 < c3 splitting [0, n) into the
    // four subsequences; empty means quarters (the last range absorbs any
    // remainder, so no pair is biased by more than 3 trials).
    std::vector<std::uint64_t> boundaries;
};

struct EkertMode {
    std::vector<model::Angle> angle_set;
    std::uint64_t choice_seed1 = 0;
    std::uint64_t choice_seed2 = 0;
};

using RunMode = std::variant<SingleMode, ChshMode, EkertMode>;

struct InProcessTransport {};

struct TcpTransport {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 = ephemeral
    int timeout_ms = 10000;
};

using Transport = std::variant<InProcessTransport, TcpTransport>;

struct RunConfig {
    std::uint64_t seed = 0;
    std::uint64_t n = 0;
    RunMode mode = SingleMode{};
    Transport transport = InProcessTransport{};
    std::filesystem::path output_dir;
};

/// Parses a JSON config document mirroring RunConfig. Angles may be numbers
/// or "pi/4"-style strings; seeds decimal numbers or hex strings. Throws
/// ConfigError naming the offending field.
RunConfig parse_config_text(const std::string& json_text);

/// Canonical JSON echo of a config: fixed key order, angles as numbers,
/// seeds as hex strings. parse(canonical(cfg)) == cfg.
std::string canonical_config_text(const RunConfig& cfg);

/// Identifier of the science content of a run: hash of (seed, n, mode) only,
/// so the same experiment in a different directory or transport keeps its id.
std::string run_id(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// The four-subsequence CHSH schedule: station 1 measures a on the first two
/// ranges and a' on the last two; station 2 measures b on ranges 1 and 3 and
/// b' on 2 and 4, so the ranges jointly realize (a,b), (a,b'), (a',b),
/// (a',b'). Throws ConfigError for n < 4.
std::pair<station::SchedulePolicy, station::SchedulePolicy> chsh_schedule(
    std::uint64_t n, model::Angle a, model::Angle a_prime, model::Angle b, model::Angle b_prime);

/// Same with explicit interior cut points (exactly 3, strictly increasing,
/// inside (0, n)).
std::pair<station::SchedulePolicy, station::SchedulePolicy> chsh_schedule(
    std::uint64_t n, model::Angle a, model::Angle a_prime, model::Angle b, model::Angle b_prime,
    const std::vector<std::uint64_t>& boundaries);

/// Independent per-trial random choices over a shared angle set, one private
/// stream per station. Throws ConfigError on an empty set or equal seeds
/// (equal seeds would correlate the supposedly independent choices).
std::pair<station::AnglePolicy, station::AnglePolicy> ekert_policies(const EkertMode& mode);

/// The policy pair implied by a config's mode.
std::pair<station::AnglePolicy, station::AnglePolicy> policies_for(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Coordinator
// ---------------------------------------------------------------------------

struct FileEntry {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uint64_t records = 0;
    bool partial = false;
};

struct RunArtifacts {
    RunConfig config;
    std::string id;
    std::filesystem::path output_dir;
    std::filesystem::path manifest_path;
    std::array<std::filesystem::path, 2> record_paths;
    std::array<FileEntry, 2> files;
    // Exact wire bytes the coordinator sent to each station, in order.
    // Station 1's bytes must not change when station 2's settings do.
    std::array<std::vector<std::uint8_t>, 2> bytes_sent;
    bool aborted = false;
    std::string abort_reason;
};

/// Runs the full two-station experiment: hands each station the common seed
/// and its private policy, collects record streams, writes both record files
/// plus manifest.json (content hashes, timestamps), and re-reads the files to
/// verify the hashes. Nothing from one station is ever forwarded to the
/// other. On station timeout or handshake failure the run is aborted and the
/// partial artifacts are flagged rather than thrown away.
/// `on_listening` (if set) fires once the TCP listener is bound, with the
/// actual port - needed by tests and useful with port 0.
RunArtifacts coordinate_run(const RunConfig& cfg,
                            const std::function<void(std::uint16_t)>& on_listening = {});

/// Station side of the wire protocol: greets the coordinator, receives its
/// assignment, measures, and streams the records back in chunks. Returns the
/// records it sent. Throws ProtocolError on handshake or transport failure.
station::RecordSet run_station_session(Channel& channel, int role,
                                       std::chrono::milliseconds timeout);

}  // namespace chameleon::protocol
