#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chameleon/errors.hpp"
#include "chameleon/log.hpp"
#include "chameleon/parse.hpp"
#include "chameleon/protocol.hpp"
#include "chameleon/report.hpp"
#include "chameleon/station.hpp"
#include "chameleon/verification.hpp"
#include "chameleon/wire.hpp"

namespace chameleon::cli {

namespace {

using json = nlohmann::ordered_json;

json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

struct ExperimentFlags {
    std::string config_path;
    std::string seed;
    std::optional<std::uint64_t> n;
    std::string mode;
    std::string angles;
    std::string choice_seeds;
    std::vector<std::uint64_t> boundaries;
    std::string out_dir;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--config", config_path, "JSON config file; flags override its fields");
        cmd.add_option("--seed", seed, "shared hidden-state seed (decimal or 0x hex)");
        cmd.add_option("--n", n, "number of trials");
        cmd.add_option("--mode", mode, "single | chsh | ekert")
            ->check(CLI::IsMember({"single", "chsh", "ekert"}));
        cmd.add_option("--angles", angles,
                       "comma-separated settings (radians or pi fractions): single a,b; "
                       "chsh a,a',b,b'; ekert the whole angle set");
        cmd.add_option("--choice-seeds", choice_seeds,
                       "ekert mode: the two private choice seeds, comma separated");
        cmd.add_option("--boundaries", boundaries,
                       "chsh mode: the 3 interior cut points of the four subsequences")
            ->expected(3);
        cmd.add_option("--out", out_dir, "output directory for run artifacts");
    }

    /// Effective config = config file with flag overrides on top.
    json effective() const {
        json cfg = config_path.empty() ? json::object() : load_config_file(config_path);
        if (!seed.empty()) {
            cfg["seed"] = seed;
        }
        if (n.has_value()) {
            cfg["n"] = *n;
        }
        if (!mode.empty() || !angles.empty()) {
            json m = cfg.contains("mode") ? cfg["mode"] : json::object();
            const std::string kind =
                !mode.empty() ? mode : m.value("kind", std::string());
            if (kind.empty()) {
                throw ConfigError("config: mode.kind: missing field (use --mode)");
            }
            m["kind"] = kind;
            if (!angles.empty()) {
                const std::vector<double> list = parse::parse_angle_list(angles);
                if (kind == "single") {
                    if (list.size() != 2) {
                        throw ConfigError("single mode takes --angles a,b");
                    }
                    m["a"] = list[0];
                    m["b"] = list[1];
                } else if (kind == "chsh") {
                    if (list.size() != 4) {
                        throw ConfigError("chsh mode takes --angles a,a',b,b'");
                    }
                    m["a"] = list[0];
                    m["a_prime"] = list[1];
                    m["b"] = list[2];
                    m["b_prime"] = list[3];
                } else {
                    m["angle_set"] = list;
                }
            }
            if (!boundaries.empty()) {
                m["boundaries"] = boundaries;
            }
            if (kind == "ekert" && !m.contains("choice_seeds")) {
                // Distinct defaults; equal seeds are rejected outright.
                m["choice_seeds"] = {"0x1001", "0x2002"};
            }
            cfg["mode"] = std::move(m);
        }
        if (!choice_seeds.empty()) {
            std::vector<std::string> seeds;
            std::stringstream ss{choice_seeds};
            for (std::string item; std::getline(ss, item, ',');) {
                seeds.push_back(item);
            }
            if (seeds.size() != 2) {
                throw ConfigError("--choice-seeds takes exactly two seeds");
            }
            if (!cfg.contains("mode")) {
                throw ConfigError("--choice-seeds requires ekert mode");
            }
            cfg["mode"]["choice_seeds"] = seeds;
        }
        if (!out_dir.empty()) {
            cfg["output_dir"] = out_dir;
        }
        return cfg;
    }
};

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open for writing: " + path.string());
    }
    out << text;
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& text) {
    const std::size_t colon = text.rfind(':');
    if (colon == std::string::npos || colon + 1 == text.size()) {
        throw ConfigError("endpoint must look like host:port, got '" + text + "'");
    }
    return {text.substr(0, colon),
            static_cast<std::uint16_t>(parse::parse_u64(text.substr(colon + 1)))};
}

int finish_run_artifacts(const protocol::RunArtifacts& artifacts) {
    if (artifacts.aborted) {
        std::cerr << "run aborted: " << artifacts.abort_reason << '\n';
        return 2;
    }
    const report::Report rep = report::analyze_artifacts(artifacts.output_dir);
    const std::string json_text = report::report_json_text(rep);
    write_text_file(artifacts.output_dir / "report.json", json_text);
    write_text_file(artifacts.output_dir / "report.csv", report::report_csv_text(rep));
    write_text_file(artifacts.output_dir / "plotdata.csv", report::plot_data_text(rep));
    std::cout << json_text;
    return 0;
}

// --- subcommands -----------------------------------------------------------

int cmd_run(const ExperimentFlags& flags) {
    json cfg_json = flags.effective();
    cfg_json["transport"] = {{"kind", "in-process"}};  // run is always in-process
    protocol::RunConfig cfg = protocol::parse_config_text(cfg_json.dump());
    if (cfg.output_dir.empty()) {
        throw ConfigError("config: output_dir: missing field (use --out)");
    }
    log::info("run " + protocol::run_id(cfg) + " -> " + cfg.output_dir.string());
    return finish_run_artifacts(protocol::coordinate_run(cfg));
}

int cmd_coordinate(const ExperimentFlags& flags, const std::string& listen,
                   std::optional<int> timeout_ms) {
    json cfg_json = flags.effective();
    if (!listen.empty()) {
        const auto [host, port] = parse_endpoint(listen);
        json t;
        t["kind"] = "tcp";
        t["host"] = host;
        t["port"] = port;
        if (cfg_json.contains("transport") && cfg_json["transport"].contains("timeout_ms")) {
            t["timeout_ms"] = cfg_json["transport"]["timeout_ms"];
        }
        cfg_json["transport"] = std::move(t);
    }
    if (timeout_ms.has_value()) {
        cfg_json["transport"]["timeout_ms"] = *timeout_ms;
    }
    protocol::RunConfig cfg = protocol::parse_config_text(cfg_json.dump());
    if (!std::holds_alternative<protocol::TcpTransport>(cfg.transport)) {
        throw ConfigError("coordinate requires tcp transport (use --listen host:port)");
    }
    if (cfg.output_dir.empty()) {
        throw ConfigError("config: output_dir: missing field (use --out)");
    }

    const protocol::RunArtifacts artifacts = protocol::coordinate_run(cfg);
    json summary;
    summary["run_id"] = artifacts.id;
    summary["output_dir"] = artifacts.output_dir.string();
    summary["aborted"] = artifacts.aborted;
    if (artifacts.aborted) {
        summary["abort_reason"] = artifacts.abort_reason;
    }
    json files = json::array();
    for (const protocol::FileEntry& f : artifacts.files) {
        files.push_back({{"path", f.path},
                         {"sha256", f.sha256},
                         {"records", f.records},
                         {"partial", f.partial}});
    }
    summary["files"] = std::move(files);
    std::cout << summary.dump(2) << '\n';
    return artifacts.aborted ? 2 : 0;
}

int cmd_station(int role, const std::string& connect, int timeout_ms, const std::string& seed,
                std::optional<std::uint64_t> n, const std::string& policy_spec,
                const std::string& out) {
    if (!connect.empty()) {
        const auto [host, port] = parse_endpoint(connect);
        const auto timeout = std::chrono::milliseconds(timeout_ms);
        auto channel = protocol::tcp_connect(host, port, timeout);
        const station::RecordSet rs = protocol::run_station_session(*channel, role, timeout);
        log::info("station " + std::to_string(role) + " sent " +
                  std::to_string(rs.records.size()) + " records");
        if (!out.empty() && out != "-") {
            station::write_records(rs, std::filesystem::path(out));
        }
        return 0;
    }

    if (seed.empty() || !n.has_value() || policy_spec.empty() || out.empty()) {
        throw ConfigError("station without --connect needs --seed, --n, --policy and --out");
    }
    const station::AnglePolicy policy = station::parse_policy(policy_spec);
    const station::RecordSet rs =
        station::run_station(role, parse::parse_seed(seed), *n, policy);
    if (out == "-") {
        station::write_records(rs, std::cout);
    } else {
        station::write_records(rs, std::filesystem::path(out));
    }
    return 0;
}

int cmd_analyze(const std::string& in_dir, const std::string& format) {
    const report::Report rep = report::analyze_artifacts(in_dir);
    report::emit_report(rep, format == "csv" ? report::Format::csv : report::Format::json,
                        std::cout);
    return 0;
}

int cmd_verify(int grid, int cov_grid, double tol, double norm_tol, double marginal_tol,
               double cov_tol) {
    verification::SuiteOptions opts;
    opts.grid = grid;
    opts.cov_grid = cov_grid;
    opts.correlation_tol = tol;
    opts.normalization_tol = norm_tol;
    opts.marginal_tol = marginal_tol;
    opts.change_of_variables_tol = cov_tol;

    const std::vector<verification::CheckRow> rows = verification::run_suite(opts);
    int failures = 0;
    for (const verification::CheckRow& row : rows) {
        json j;
        j["check"] = row.check;
        j["a"] = row.a;
        j["b"] = row.b;
        j["value"] = row.value;
        j["expected"] = row.expected;
        j["error"] = row.error;
        j["tol"] = row.tol;
        j["method"] = row.method;
        j["pass"] = row.pass;
        std::cout << j.dump() << '\n';
        failures += row.pass ? 0 : 1;
    }
    json summary;
    summary["summary"] = {{"checks", rows.size()}, {"failures", failures}};
    std::cout << summary.dump() << '\n';
    return failures == 0 ? 0 : 2;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{
        "chameleon - a two-station experiment in which locally weighted, deterministic "
        "measurements of a shared angle sequence reproduce the singlet correlations "
        "-cos(b-a) and violate the CHSH and 1964 Bell bounds.\n"
        "Diagnostics go to stderr only, gated by CHAMELEON_LOG=error|info|debug; "
        "stdout carries machine-readable results."};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand(
        "run", "full experiment in one process: coordinate both stations, then analyze");
    ExperimentFlags run_flags;
    run_flags.add_to(*run);

    // coordinate
    auto* coordinate =
        app.add_subcommand("coordinate", "coordinate remote stations over tcp");
    ExperimentFlags coord_flags;
    coord_flags.add_to(*coordinate);
    std::string listen;
    std::optional<int> coord_timeout;
    coordinate->add_option("--listen", listen, "listen endpoint host:port (port 0 = ephemeral)");
    coordinate->add_option("--timeout-ms", coord_timeout, "per-message and accept deadline");

    // station
    auto* station_cmd = app.add_subcommand("station", "run one measurement station");
    int role = 1;
    std::string connect;
    int station_timeout = 10000;
    std::string seed;
    std::optional<std::uint64_t> n;
    std::string policy_spec;
    std::string out;
    station_cmd->add_option("--role", role, "station role, 1 or 2")->check(CLI::Range(1, 2));
    station_cmd->add_option("--connect", connect, "coordinator endpoint host:port");
    station_cmd->add_option("--timeout-ms", station_timeout, "wire deadline in tcp mode");
    station_cmd->add_option("--seed", seed, "hidden-state seed (file mode)");
    station_cmd->add_option("--n", n, "trial count (file mode)");
    station_cmd->add_option("--policy", policy_spec,
                            "fixed:<angle> | schedule:<b>-<e>:<angle>,... | "
                            "random:<angle>,...@<seed>");
    station_cmd->add_option("--out", out, "record file destination ('-' for stdout)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "recompute the report from run artifacts");
    std::string in_dir;
    std::string format = "json";
    analyze->add_option("--in", in_dir, "run artifact directory")->required();
    analyze->add_option("--format", format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));

    // verify
    auto* verify = app.add_subcommand(
        "verify", "numerical verification: quadrature grids against the closed form");
    int grid = 16;
    int cov_grid = 8;
    double tol = 1e-8;
    double norm_tol = 1e-10;
    double marginal_tol = 1e-8;
    double cov_tol = 1e-6;
    verify->add_option("--grid", grid, "settings grid size")->check(CLI::PositiveNumber);
    verify->add_option("--cov-grid", cov_grid, "grid size for the change-of-variables check")
        ->check(CLI::PositiveNumber);
    verify->add_option("--tol", tol, "correlation tolerance");
    verify->add_option("--norm-tol", norm_tol, "normalization tolerance");
    verify->add_option("--marginal-tol", marginal_tol, "marginal tolerance");
    verify->add_option("--cov-tol", cov_tol, "change-of-variables tolerance");

    try {
        app.parse(argc, argv);

        if (run->parsed()) {
            return cmd_run(run_flags);
        }
        if (coordinate->parsed()) {
            return cmd_coordinate(coord_flags, listen, coord_timeout);
        }
        if (station_cmd->parsed()) {
            return cmd_station(role, connect, station_timeout, seed, n, policy_spec, out);
        }
        if (analyze->parsed()) {
            return cmd_analyze(in_dir, format);
        }
        if (verify->parsed()) {
            return cmd_verify(grid, cov_grid, tol, norm_tol, marginal_tol, cov_tol);
        }
        return 1;
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
}

}  // namespace chameleon::cli
