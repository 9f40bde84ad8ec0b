#include <doctest.h>

#include <chrono>
#include <thread>

#include <nlohmann/json.hpp>

#include "chameleon/errors.hpp"
#include "chameleon/hash.hpp"
#include "chameleon/protocol.hpp"
#include "chameleon/report.hpp"
#include "test_util.hpp"

using namespace chameleon;
using namespace std::chrono_literals;
using model::Angle;
namespace proto = chameleon::protocol;

TEST_SUITE_BEGIN("protocol");

TEST_CASE("chsh schedule: 10k-per-pair quarters") {
    const Angle a(0), ap(kPi / 2), b(kPi / 4), bp(3 * kPi / 4);
    const auto [p1, p2] = proto::chsh_schedule(40000, a, ap, b, bp);
    REQUIRE(p1.ranges.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(p1.ranges[i].begin == i * 10000);
        CHECK(p1.ranges[i].end == (i + 1) * 10000);
    }
    // the quarters realize (a,b), (a,b'), (a',b), (a',b')
    const std::pair<Angle, Angle> expected[4] = {{a, b}, {a, bp}, {ap, b}, {ap, bp}};
    for (std::size_t q = 0; q < 4; ++q) {
        const std::uint64_t probe = q * 10000 + 123;
        CHECK(station::resolve_angle(station::AnglePolicy{p1}, probe) == expected[q].first);
        CHECK(station::resolve_angle(station::AnglePolicy{p2}, probe) == expected[q].second);
    }
}

TEST_CASE("chsh schedule: minimal and remainder cases") {
    const Angle a(0), ap(1), b(2), bp(3);
    const auto [p1, p2] = proto::chsh_schedule(4, a, ap, b, bp);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(p1.ranges[i].begin == i);
        CHECK(p1.ranges[i].end == i + 1);
    }

    const auto [q1, q2] = proto::chsh_schedule(40002, a, ap, b, bp);
    CHECK(q1.ranges[3].begin == 30000);
    CHECK(q1.ranges[3].end == 40002);

    CHECK_THROWS_AS(proto::chsh_schedule(3, a, ap, b, bp), ConfigError);
}

TEST_CASE("chsh schedule: explicit boundaries") {
    const Angle a(0), ap(1), b(2), bp(3);
    const auto [p1, p2] = proto::chsh_schedule(100, a, ap, b, bp, {10, 50, 70});
    CHECK(p1.ranges[1].begin == 10);
    CHECK(p1.ranges[1].end == 50);
    CHECK_THROWS_AS(proto::chsh_schedule(100, a, ap, b, bp, {10, 50}), ConfigError);
    CHECK_THROWS_AS(proto::chsh_schedule(100, a, ap, b, bp, {50, 10, 70}), ConfigError);
    CHECK_THROWS_AS(proto::chsh_schedule(100, a, ap, b, bp, {10, 50, 100}), ConfigError);
}

TEST_CASE("ekert policies") {
    proto::EkertMode m;
    m.angle_set = {Angle(0), Angle(kPi / 4), Angle(kPi / 2)};
    m.choice_seed1 = 1;
    m.choice_seed2 = 2;
    const auto [p1, p2] = proto::ekert_policies(m);
    const auto& r1 = std::get<station::SeededRandomPolicy>(p1);
    const auto& r2 = std::get<station::SeededRandomPolicy>(p2);
    CHECK(r1.choices == r2.choices);
    CHECK(r1.choice_seed != r2.choice_seed);

    m.choice_seed2 = 1;
    CHECK_THROWS_AS(proto::ekert_policies(m), ConfigError);
    m.choice_seed2 = 2;
    m.angle_set = {Angle(0.7)};
    CHECK_NOTHROW(proto::ekert_policies(m));  // degenerate single angle is fine
    m.angle_set.clear();
    CHECK_THROWS_AS(proto::ekert_policies(m), ConfigError);
}

TEST_CASE("wire messages survive an encode/decode round trip") {
    std::vector<proto::WireMessage> messages;
    messages.push_back(proto::Hello{2, proto::kProtocolVersion});
    messages.push_back(proto::Assign{0xDEADBEEF, 1000,
                                     station::SeededRandomPolicy{{Angle(0), Angle(2.2)}, 0x42}});
    messages.push_back(proto::Assign{
        1, 4, station::make_schedule({{0, 2, Angle(0.5)}, {2, 4, Angle(1.5)}})});
    proto::RecordsChunk chunk;
    chunk.records = {{0, 0.5, 1, 0.25}, {1, 0.5, -1, 2.5066282746310002}};
    chunk.last = true;
    messages.push_back(chunk);
    messages.push_back(proto::Ack{});
    messages.push_back(proto::AbortRun{"because"});

    for (const proto::WireMessage& m : messages) {
        const std::string body = proto::encode_message(m);
        const proto::WireMessage back = proto::decode_message(body);
        CHECK(proto::encode_message(back) == body);
        CHECK(back.index() == m.index());
    }
    CHECK_THROWS_AS(proto::decode_message("not json"), ProtocolError);
    CHECK_THROWS_AS(proto::decode_message(R"({"type":"wat"})"), ProtocolError);
}

TEST_CASE("frame bytes carry a 32-bit big-endian length") {
    const auto f = proto::frame_bytes("abc");
    REQUIRE(f.size() == 7);
    CHECK(f[0] == 0);
    CHECK(f[1] == 0);
    CHECK(f[2] == 0);
    CHECK(f[3] == 3);
    CHECK(f[4] == 'a');
}

TEST_CASE("in-process channel: messages flow, timeouts return nullopt") {
    auto [a, b] = proto::make_in_process_pair();
    a->send("ping");
    auto got = b->receive(100ms);
    REQUIRE(got.has_value());
    CHECK(*got == "ping");
    CHECK(!b->receive(10ms).has_value());

    b.reset();  // peer gone
    CHECK_THROWS_AS(a->send("x"), ProtocolError);
}

TEST_CASE("config text round trip") {
    proto::RunConfig cfg;
    cfg.seed = 42;
    cfg.n = 40000;
    cfg.mode = proto::ChshMode{Angle(0), Angle(kPi / 2), Angle(kPi / 4), Angle(3 * kPi / 4), {}};
    cfg.transport = proto::TcpTransport{"127.0.0.1", 9000, 5000};
    cfg.output_dir = "out";
    const std::string text = proto::canonical_config_text(cfg);
    const proto::RunConfig back = proto::parse_config_text(text);
    CHECK(proto::canonical_config_text(back) == text);
    CHECK(proto::run_id(back) == proto::run_id(cfg));

    // angles and seeds accept friendly spellings
    const proto::RunConfig friendly = proto::parse_config_text(
        R"({"seed":"0x2a","n":40000,"mode":{"kind":"chsh","a":0,"a_prime":"pi/2","b":"pi/4","b_prime":"3pi/4"}})");
    CHECK(proto::run_id(friendly) == proto::run_id(cfg));

    CHECK_THROWS_AS(proto::parse_config_text("{"), ConfigError);
    CHECK_THROWS_AS(proto::parse_config_text(R"({"n":1})"), ConfigError);
    CHECK_THROWS_AS(proto::parse_config_text(R"({"seed":1,"n":1,"mode":{"kind":"wat"}})"),
                    ConfigError);
}

namespace {

proto::RunConfig single_config(const std::filesystem::path& dir, double a = 0.0, double b = 0.0) {
    proto::RunConfig cfg;
    cfg.seed = 42;
    cfg.n = 1000;
    cfg.mode = proto::SingleMode{Angle(a), Angle(b)};
    cfg.transport = proto::InProcessTransport{};
    cfg.output_dir = dir;
    return cfg;
}

}  // namespace

TEST_CASE("coordinate_run produces complete, hash-consistent artifacts") {
    const auto dir = testutil::fresh_dir("run-basic");
    const proto::RunArtifacts art = proto::coordinate_run(single_config(dir));
    CHECK(!art.aborted);
    for (int r = 0; r < 2; ++r) {
        CHECK(art.files[r].records == 1000);
        CHECK(!art.files[r].partial);
        CHECK(hash::sha256_file_hex(art.record_paths[r]) == art.files[r].sha256);
        const station::RecordSet rs = station::read_records(art.record_paths[r]);
        CHECK(rs.records.size() == 1000);
        CHECK(rs.role == r + 1);
    }

    const auto manifest = nlohmann::json::parse(testutil::slurp(art.manifest_path));
    CHECK(manifest.at("run_id") == art.id);
    CHECK(manifest.at("aborted") == false);
    CHECK(manifest.at("files").size() == 2);
}

TEST_CASE("coordinate_run is deterministic end to end") {
    const auto dir1 = testutil::fresh_dir("run-det-1");
    const auto dir2 = testutil::fresh_dir("run-det-2");
    proto::coordinate_run(single_config(dir1, 0.3, 1.2));
    proto::coordinate_run(single_config(dir2, 0.3, 1.2));
    CHECK(testutil::slurp(dir1 / "station1.records") ==
          testutil::slurp(dir2 / "station1.records"));
    CHECK(testutil::slurp(dir1 / "station2.records") ==
          testutil::slurp(dir2 / "station2.records"));

    // manifests agree on everything except the timestamps
    auto m1 = nlohmann::json::parse(testutil::slurp(dir1 / "manifest.json"));
    auto m2 = nlohmann::json::parse(testutil::slurp(dir2 / "manifest.json"));
    for (auto* m : {&m1, &m2}) {
        m->erase("started");
        m->erase("finished");
    }
    m1["config"].erase("output_dir");
    m2["config"].erase("output_dir");
    CHECK(m1 == m2);
}

TEST_CASE("isolation: bytes to station 1 are independent of station 2's angles") {
    const auto dir1 = testutil::fresh_dir("iso-1");
    const auto dir2 = testutil::fresh_dir("iso-2");
    auto make = [](const std::filesystem::path& dir, double b, double bp) {
        proto::RunConfig cfg;
        cfg.seed = 7;
        cfg.n = 400;
        cfg.mode = proto::ChshMode{Angle(0), Angle(kPi / 2), Angle(b), Angle(bp), {}};
        cfg.transport = proto::InProcessTransport{};
        cfg.output_dir = dir;
        return cfg;
    };
    const proto::RunArtifacts art1 = proto::coordinate_run(make(dir1, kPi / 4, 3 * kPi / 4));
    const proto::RunArtifacts art2 = proto::coordinate_run(make(dir2, 0.9, 2.9));

    CHECK(art1.bytes_sent[0] == art2.bytes_sent[0]);  // station 1 sees identical bytes
    CHECK(art1.bytes_sent[1] != art2.bytes_sent[1]);  // station 2's assignment differs
    CHECK(testutil::slurp(dir1 / "station1.records") ==
          testutil::slurp(dir2 / "station1.records"));
    CHECK(testutil::slurp(dir1 / "station2.records") !=
          testutil::slurp(dir2 / "station2.records"));
}

TEST_CASE("tcp transport reproduces the in-process run byte for byte") {
    const auto dir_ip = testutil::fresh_dir("tcp-ref");
    proto::coordinate_run(single_config(dir_ip, 0.5, 2.0));

    const auto dir_tcp = testutil::fresh_dir("tcp-run");
    proto::RunConfig cfg = single_config(dir_tcp, 0.5, 2.0);
    cfg.transport = proto::TcpTransport{"127.0.0.1", 0, 5000};

    std::vector<std::thread> stations;
    const proto::RunArtifacts art = proto::coordinate_run(cfg, [&](std::uint16_t port) {
        for (int role : {1, 2}) {
            stations.emplace_back([role, port] {
                // only CHECK-style (non-throwing) asserts are safe off the
                // main thread, and nothing may escape the thread
                try {
                    auto ch = proto::tcp_connect("127.0.0.1", port, 5000ms);
                    proto::run_station_session(*ch, role, 5000ms);
                } catch (const std::exception& e) {
                    FAIL_CHECK("station thread failed: " << e.what());
                }
            });
        }
    });
    for (std::thread& t : stations) {
        t.join();
    }
    CHECK(!art.aborted);
    CHECK(testutil::slurp(dir_ip / "station1.records") ==
          testutil::slurp(dir_tcp / "station1.records"));
    CHECK(testutil::slurp(dir_ip / "station2.records") ==
          testutil::slurp(dir_tcp / "station2.records"));
}

TEST_CASE("tcp coordinator aborts within the deadline when stations are absent") {
    const auto dir = testutil::fresh_dir("tcp-timeout");
    proto::RunConfig cfg = single_config(dir);
    cfg.transport = proto::TcpTransport{"127.0.0.1", 0, 300};

    const auto t0 = std::chrono::steady_clock::now();
    const proto::RunArtifacts art = proto::coordinate_run(cfg);
    const auto elapsed = std::chrono::steady_clock::now() - t0;

    CHECK(art.aborted);
    CHECK(art.abort_reason.find("timeout") != std::string::npos);
    CHECK(elapsed < 2s);
    CHECK(art.files[0].partial);
    const auto manifest = nlohmann::json::parse(testutil::slurp(art.manifest_path));
    CHECK(manifest.at("aborted") == true);

    // partial artifacts are refused downstream
    CHECK_THROWS_WITH_AS(report::analyze_artifacts(dir), doctest::Contains("aborted"), Error);
}

TEST_CASE("sha256 matches the standard test vector") {
    CHECK(hash::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hash::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("protocol version mismatch aborts the handshake") {
    const auto dir = testutil::fresh_dir("tcp-version");
    proto::RunConfig cfg = single_config(dir);
    cfg.transport = proto::TcpTransport{"127.0.0.1", 0, 500};

    std::thread impostor;
    const proto::RunArtifacts art = proto::coordinate_run(cfg, [&](std::uint16_t port) {
        impostor = std::thread([port] {
            try {
                auto ch = proto::tcp_connect("127.0.0.1", port, 2000ms);
                ch->send(proto::encode_message(proto::Hello{1, 99}));
                const auto reply = ch->receive(2000ms);
                CHECK(reply.has_value());
                if (reply.has_value()) {
                    const proto::WireMessage msg = proto::decode_message(*reply);
                    CHECK(std::holds_alternative<proto::AbortRun>(msg));
                }
            } catch (const std::exception& e) {
                FAIL_CHECK("impostor thread failed: " << e.what());
            }
        });
    });
    impostor.join();
    CHECK(art.aborted);
    CHECK(art.abort_reason.find("version") != std::string::npos);
}

TEST_CASE("station session surfaces coordinator aborts") {
    auto [coord, stat] = proto::make_in_process_pair();
    std::thread coordinator([ch = std::move(coord)] {
        (void)ch->receive(1000ms);  // the hello
        ch->send(proto::encode_message(proto::AbortRun{"go away"}));
    });
    CHECK_THROWS_AS(proto::run_station_session(*stat, 1, 1000ms), ProtocolError);
    coordinator.join();
}

TEST_SUITE_END();
