// Acceptance suite: every release gate in one binary, one pass/fail line per
// criterion. Exits nonzero if anything fails. Criterion 7 shells out to the
// CLI binary (CHAMELEON_CLI env var, or ../tools/chameleon next to this
// binary) to check determinism across separate processes.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chameleon/analysis.hpp"
#include "chameleon/model.hpp"
#include "chameleon/prng.hpp"
#include "chameleon/protocol.hpp"
#include "chameleon/report.hpp"
#include "chameleon/verification.hpp"

using namespace chameleon;
using model::Angle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Timed {
    Outcome outcome;
    double seconds = 0.0;
};

Timed timed(const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = f();
    const auto t1 = std::chrono::steady_clock::now();
    return {std::move(o), std::chrono::duration<double>(t1 - t0).count()};
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "chameleon-acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double max_error(const std::vector<verification::CheckRow>& rows) {
    double m = 0.0;
    for (const auto& r : rows) {
        m = std::max(m, r.error);
    }
    return m;
}

protocol::RunConfig chsh_config(const fs::path& dir, double b = kPi / 4,
                                double b_prime = 3 * kPi / 4) {
    protocol::RunConfig cfg;
    cfg.seed = 42;
    cfg.n = 40000;
    cfg.mode = protocol::ChshMode{Angle(0), Angle(kPi / 2), Angle(b), Angle(b_prime), {}};
    cfg.transport = protocol::InProcessTransport{};
    cfg.output_dir = dir;
    return cfg;
}

// --- criteria ---------------------------------------------------------------

Outcome closed_form_reproduction() {
    const auto rows = verification::correlation_grid(16, 1e-8);
    const double err = max_error(rows);
    return {err <= 1e-8, "max |E + cos(b-a)| = " + fmt(err) + " on 16x16 grid, tol 1e-8"};
}

Outcome normalization() {
    const auto rows = verification::normalization_grid(16, 1e-10);
    const double err = max_error(rows);
    return {err <= 1e-10, "max |N - 1| = " + fmt(err) + " on 16x16 grid, tol 1e-10"};
}

Outcome change_of_variables() {
    const auto rows = verification::change_of_variables_grid(8, 1e-6);
    const double err = max_error(rows);
    return {err <= 1e-6, "max |mu-form - lambda-form| = " + fmt(err) + " on 8x8 grid, tol 1e-6"};
}

Outcome monte_carlo_chsh() {
    const auto dir = scratch_dir("chsh");
    const protocol::RunConfig cfg = chsh_config(dir);
    const protocol::RunArtifacts art = protocol::coordinate_run(cfg);
    if (art.aborted) {
        return {false, "run aborted: " + art.abort_reason};
    }
    const report::Report rep = report::analyze_artifacts(dir);
    if (!rep.chsh.has_value()) {
        return {false, "no chsh result in report"};
    }
    const analysis::ChshResult& c = *rep.chsh;

    std::ostringstream detail;
    bool pass = true;
    for (const analysis::CorrelationEstimate& e : c.estimates) {
        const double target = model::closed_form_correlation(e.a, e.b);
        const double dev = std::abs(e.estimate - target);
        if (dev > 5 * e.std_error) {
            pass = false;
        }
        detail << fmt(dev / e.std_error) << "sg ";
    }
    const double target = 2 * std::sqrt(2.0);
    const bool stat_ok = std::abs(c.statistic - target) <= 0.1 && c.statistic > 2.0;
    pass = pass && stat_ok;
    detail << "| S = " << fmt(c.statistic) << " (2*sqrt(2) = " << fmt(target) << ", |diff| "
           << fmt(std::abs(c.statistic - target)) << " <= 0.1, S > 2)";
    return {pass, detail.str()};
}

Outcome bell_1964_violation() {
    const auto dir = scratch_dir("ekert");
    protocol::RunConfig cfg;
    cfg.seed = 42;
    cfg.n = 90000;
    cfg.mode = protocol::EkertMode{{Angle(0), Angle(kPi / 3), Angle(2 * kPi / 3)}, 0x1001, 0x2002};
    cfg.transport = protocol::InProcessTransport{};
    cfg.output_dir = dir;
    const protocol::RunArtifacts art = protocol::coordinate_run(cfg);
    if (art.aborted) {
        return {false, "run aborted: " + art.abort_reason};
    }
    const report::Report rep = report::analyze_artifacts(dir);
    for (const analysis::Bell1964Result& b : rep.bell1964) {
        if (b.a == Angle(0) && b.b == Angle(kPi / 3) && b.c == Angle(2 * kPi / 3)) {
            const bool pass = b.slack < 0.0 && b.margin_sigma >= 5.0;
            return {pass, "slack = " + fmt(b.slack) + " (analytic -0.5), margin = " +
                              fmt(b.margin_sigma) + " sigma (need >= 5)"};
        }
    }
    return {false, "triple (0, pi/3, 2pi/3) missing from report"};
}

Outcome no_signaling() {
    // (a) structural: station-1 bytes are untouched by station-2 settings
    const auto dir1 = scratch_dir("nosig-1");
    const auto dir2 = scratch_dir("nosig-2");
    protocol::coordinate_run(chsh_config(dir1));
    protocol::coordinate_run(chsh_config(dir2, 0.9, 2.9));
    const bool structural =
        slurp(dir1 / "station1.records") == slurp(dir2 / "station1.records") &&
        slurp(dir1 / "station2.records") != slurp(dir2 / "station2.records");

    // (b) statistical: weighted marginals vanish at n = 4e4
    const report::Report rep = report::analyze_artifacts(dir1);
    const double z1 = rep.marginals[0].std_error > 0
                          ? std::abs(rep.marginals[0].estimate) / rep.marginals[0].std_error
                          : 0.0;
    const double z2 = rep.marginals[1].std_error > 0
                          ? std::abs(rep.marginals[1].estimate) / rep.marginals[1].std_error
                          : 0.0;
    const bool statistical = z1 <= 5.0 && z2 <= 5.0;

    return {structural && statistical,
            std::string("records byte-identical under partner-angle change: ") +
                (structural ? "yes" : "NO") + "; marginals at " + fmt(z1) + " / " + fmt(z2) +
                " sigma (need <= 5)"};
}

Outcome determinism_across_processes() {
    const char* env = std::getenv("CHAMELEON_CLI");
    fs::path cli;
    if (env != nullptr && *env != '\0') {
        cli = env;
    } else {
        std::error_code ec;
        const fs::path self = fs::read_symlink("/proc/self/exe", ec);
        if (!ec) {
            cli = self.parent_path().parent_path() / "tools" / "chameleon";
        }
    }
    if (cli.empty() || !fs::exists(cli)) {
        return {false, "CHAMELEON_CLI not set and no ../tools/chameleon; cannot spawn processes"};
    }
    const auto dir1 = scratch_dir("proc-1");
    const auto dir2 = scratch_dir("proc-2");
    auto run_once = [&](const fs::path& out) {
        std::ostringstream cmd;
        cmd << '"' << cli.string() << '"'
            << " run --mode chsh --seed 42 --n 40000 --angles 0,pi/2,pi/4,3pi/4 --out " << out
            << " > " << (out / "stdout.json") << " 2> " << (out / "stderr.txt");
        return std::system(cmd.str().c_str());
    };
    if (run_once(dir1) != 0 || run_once(dir2) != 0) {
        return {false, "CLI run failed (see stderr.txt in scratch dirs)"};
    }
    const bool records_equal =
        slurp(dir1 / "station1.records") == slurp(dir2 / "station1.records") &&
        slurp(dir1 / "station2.records") == slurp(dir2 / "station2.records");
    const bool reports_equal = slurp(dir1 / "report.json") == slurp(dir2 / "report.json") &&
                               slurp(dir1 / "stdout.json") == slurp(dir2 / "stdout.json");
    return {records_equal && reports_equal,
            std::string("record files ") + (records_equal ? "identical" : "DIFFER") +
                ", reports " + (reports_equal ? "identical" : "DIFFER") +
                " across two processes"};
}

// Random trigonometric polynomial on a seeded stream.
struct TrigPoly {
    double c0;
    double cc[3];
    double sc[3];

    static TrigPoly make(std::uint64_t seed) {
        auto coef = [seed](std::uint64_t k) {
            return 2.0 * (prng::u64_to_angle(prng::raw_at(seed, k)) / kTwoPi) - 1.0;
        };
        TrigPoly p{};
        p.c0 = coef(0);
        for (int k = 0; k < 3; ++k) {
            p.cc[k] = coef(2 * k + 1);
            p.sc[k] = coef(2 * k + 2);
        }
        return p;
    }

    double operator()(double x) const {
        double v = c0;
        for (int k = 0; k < 3; ++k) {
            v += cc[k] * std::cos((k + 1) * x) + sc[k] * std::sin((k + 1) * x);
        }
        return v;
    }
};

Outcome locality_factorization() {
    const auto d2 = model::station2_dynamics();
    double max_rel = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto d1 = model::station1_dynamics(Angle(kTwoPi * trial / 20.0));
        const TrigPoly f = TrigPoly::make(9000 + trial);
        const TrigPoly g = TrigPoly::make(9500 + trial);
        const auto lifted = model::local_dynamics_apply(
            d1, d2, [f, g](double u, double v) { return f(u) * g(v); });
        for (int i = 0; i < 100; ++i) {
            for (int j = 0; j < 100; ++j) {
                const double u = kTwoPi * i / 100.0;
                const double v = kTwoPi * j / 100.0;
                const double lhs = lifted(u, v);
                const double rhs =
                    (d1.density(u) * f(d1.transport(u))) * (g(d2.transport(v)) * d2.density(v));
                const double denom = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
                max_rel = std::max(max_rel, std::abs(lhs - rhs) / denom);
            }
        }
    }
    return {max_rel <= 1e-12,
            "max relative deviation " + fmt(max_rel) + " over 20 f,g pairs on 100x100 grid"};
}

struct Criterion {
    int number;
    std::string name;
    std::function<Outcome()> run;
    double time_limit_s;  // 0 = no limit stated
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "closed-form reproduction", closed_form_reproduction, 2.0},
        {2, "normalization", normalization, 1.0},
        {3, "change-of-variables equivalence", change_of_variables, 5.0},
        {4, "monte-carlo chsh at 40k trials", monte_carlo_chsh, 1.0},
        {5, "bell-1964 violation (ekert mode)", bell_1964_violation, 2.0},
        {6, "no-signaling (structural + statistical)", no_signaling, 2.0},
        {7, "determinism across processes", determinism_across_processes, 0.0},
        {8, "locality factorization", locality_factorization, 1.0},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const Timed t = timed(c.run);
        const bool in_time = c.time_limit_s == 0.0 || t.seconds < c.time_limit_s;
        const bool pass = t.outcome.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << c.number << "  " << c.name << "  -  "
                  << t.outcome.detail << "  [" << fmt(t.seconds) << " s";
        if (c.time_limit_s > 0.0) {
            std::cout << (in_time ? " < " : " >= NOT WITHIN ") << fmt(c.time_limit_s) << " s";
        }
        std::cout << "]\n";
    }
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
