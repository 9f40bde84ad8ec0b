#include "chameleon/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "chameleon/errors.hpp"
#include "chameleon/hash.hpp"
#include "chameleon/parse.hpp"

namespace chameleon::report {

using json = nlohmann::ordered_json;

namespace {

const char* estimator_name(analysis::Estimator e) {
    return e == analysis::Estimator::plain ? "plain" : "self-normalized";
}

json estimate_to_json(const analysis::CorrelationEstimate& e) {
    // Weighted estimates may stochastically exceed |1|; they are reported
    // raw, with a footnote flag instead of clipping.
    return json{{"a", e.a.radians()},
                {"b", e.b.radians()},
                {"estimate", e.estimate},
                {"stderr", e.std_error},
                {"count", e.count},
                {"estimator", estimator_name(e.estimator)},
                {"low_count", e.low_count},
                {"exceeds_unit", std::abs(e.estimate) > 1.0}};
}

json mean_to_json(const analysis::MeanEstimate& m) {
    return json{{"estimate", m.estimate}, {"stderr", m.std_error}, {"count", m.count}};
}

}  // namespace

Report build_report(const protocol::RunConfig& cfg, const station::RecordSet& r1,
                    const station::RecordSet& r2) {
    Report rep;
    rep.run_id = protocol::run_id(cfg);

    rep.correlations = analysis::ekert_group_correlations(r1, r2, 100, analysis::Estimator::plain);
    rep.correlations_self_normalized =
        analysis::ekert_group_correlations(r1, r2, 100, analysis::Estimator::self_normalized);

    // Exact-match lookup of the plain estimate for a configured setting pair;
    // settings round-trip losslessly, so double equality is reliable.
    std::map<std::pair<double, double>, const analysis::CorrelationEstimate*> by_pair;
    for (const analysis::CorrelationEstimate& e : rep.correlations) {
        by_pair[{e.a.radians(), e.b.radians()}] = &e;
    }
    auto lookup = [&](model::Angle x, model::Angle y) -> const analysis::CorrelationEstimate* {
        auto it = by_pair.find({x.radians(), y.radians()});
        return it == by_pair.end() ? nullptr : it->second;
    };

    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, protocol::SingleMode>) {
                rep.mode = "single";
            } else if constexpr (std::is_same_v<M, protocol::ChshMode>) {
                rep.mode = "chsh";
                const std::array<std::pair<model::Angle, model::Angle>, 4> pairs = {
                    std::pair{m.a, m.b}, std::pair{m.a, m.b_prime}, std::pair{m.a_prime, m.b},
                    std::pair{m.a_prime, m.b_prime}};
                std::array<analysis::CorrelationEstimate, 4> estimates;
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    const analysis::CorrelationEstimate* e =
                        lookup(pairs[i].first, pairs[i].second);
                    if (e == nullptr) {
                        throw IntegrityError("records carry no trials for a configured chsh pair");
                    }
                    estimates[i] = *e;
                }
                rep.chsh = analysis::chsh_result(m.a, m.a_prime, m.b, m.b_prime, estimates);
            } else {
                rep.mode = "ekert";
                // One 1964 check per (a, {b, c}) combination of distinct
                // settings with all three pair estimates present.
                const std::vector<model::Angle>& set = m.angle_set;
                for (std::size_t i = 0; i < set.size(); ++i) {
                    for (std::size_t j = 0; j < set.size(); ++j) {
                        for (std::size_t k = j + 1; k < set.size(); ++k) {
                            if (j == i || k == i) {
                                continue;
                            }
                            const auto* ab = lookup(set[i], set[j]);
                            const auto* ac = lookup(set[i], set[k]);
                            const auto* bc = lookup(set[j], set[k]);
                            if (ab == nullptr || ac == nullptr || bc == nullptr) {
                                continue;
                            }
                            rep.bell1964.push_back(analysis::bell1964_result(
                                set[i], set[j], set[k], *ab, *ac, *bc));
                        }
                    }
                }
            }
        },
        cfg.mode);

    rep.marginals = analysis::weighted_marginals(r1, r2);
    rep.weight_product = analysis::mean_weight_product(r1, r2);
    return rep;
}

Report analyze_artifacts(const std::filesystem::path& dir) {
    const std::filesystem::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) {
        throw Error("cannot open manifest: " + manifest_path.string());
    }
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw IntegrityError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }

    if (manifest.value("aborted", false)) {
        throw Error("run was aborted (" + manifest.value("abort_reason", std::string("unknown")) +
                    "); refusing to analyze partial artifacts");
    }
    const protocol::RunConfig cfg = protocol::parse_config_text(manifest.at("config").dump());

    std::array<station::RecordSet, 2> sets;
    std::array<bool, 2> have{false, false};
    const json& files = manifest.at("files");
    if (!files.is_array() || files.size() != 2) {
        throw IntegrityError("manifest must list exactly two record files");
    }
    for (const json& f : files) {
        const std::filesystem::path path = dir / f.at("path").get<std::string>();
        const std::string digest = hash::sha256_file_hex(path);
        if (digest != f.at("sha256").get<std::string>()) {
            throw IntegrityError("hash mismatch on re-read: " + path.string());
        }
        station::RecordSet rs = station::read_records(path);
        if (rs.records.size() != f.at("records").get<std::uint64_t>()) {
            throw IntegrityError("record count disagrees with manifest: " + path.string());
        }
        if (rs.records.size() != cfg.n) {
            throw IntegrityError("record count disagrees with configured n: " + path.string());
        }
        if (rs.seed != cfg.seed) {
            throw IntegrityError("record seed disagrees with configured seed: " + path.string());
        }
        if (have[rs.role - 1]) {
            throw IntegrityError("duplicate role in manifest record files: " + path.string());
        }
        have[rs.role - 1] = true;
        sets[rs.role - 1] = std::move(rs);
    }
    if (!have[0] || !have[1]) {
        throw IntegrityError("manifest record files must cover roles 1 and 2");
    }
    return build_report(cfg, sets[0], sets[1]);
}

std::string report_json_text(const Report& r) {
    json j;
    j["run_id"] = r.run_id;
    j["mode"] = r.mode;
    json correlations = json::array();
    for (const analysis::CorrelationEstimate& e : r.correlations) {
        correlations.push_back(estimate_to_json(e));
    }
    j["correlations"] = std::move(correlations);
    json diagnostics = json::array();
    for (const analysis::CorrelationEstimate& e : r.correlations_self_normalized) {
        diagnostics.push_back(estimate_to_json(e));
    }
    j["correlations_self_normalized"] = std::move(diagnostics);
    if (r.chsh.has_value()) {
        const analysis::ChshResult& c = *r.chsh;
        j["chsh"] = json{{"a", c.a.radians()},
                         {"a_prime", c.a_prime.radians()},
                         {"b", c.b.radians()},
                         {"b_prime", c.b_prime.radians()},
                         {"e_ab", c.estimates[0].estimate},
                         {"e_ab_prime", c.estimates[1].estimate},
                         {"e_a_prime_b", c.estimates[2].estimate},
                         {"e_a_prime_b_prime", c.estimates[3].estimate},
                         {"statistic", c.statistic},
                         {"bound", c.bound},
                         {"violated", c.violated},
                         {"margin_sigma", c.margin_sigma}};
    } else {
        j["chsh"] = nullptr;
    }
    json bell = json::array();
    for (const analysis::Bell1964Result& b : r.bell1964) {
        bell.push_back(json{{"a", b.a.radians()},
                            {"b", b.b.radians()},
                            {"c", b.c.radians()},
                            {"e_ab", b.e_ab},
                            {"e_ac", b.e_ac},
                            {"e_bc", b.e_bc},
                            {"slack", b.slack},
                            {"violated", b.violated},
                            {"margin_sigma", b.margin_sigma}});
    }
    j["bell1964"] = std::move(bell);
    j["marginals"] = json{{"station1", mean_to_json(r.marginals[0])},
                          {"station2", mean_to_json(r.marginals[1])},
                          {"weight_product", mean_to_json(r.weight_product)}};
    return j.dump(2) + "\n";
}

std::string report_csv_text(const Report& r) {
    using parse::format_double;
    std::ostringstream out;
    out << "# run_id," << r.run_id << "\n# mode," << r.mode << '\n';
    auto correlation_block = [&out](const std::vector<analysis::CorrelationEstimate>& rows) {
        out << "a,b,estimate,stderr,count,estimator,low_count,exceeds_unit\n";
        for (const analysis::CorrelationEstimate& e : rows) {
            out << format_double(e.a.radians()) << ',' << format_double(e.b.radians()) << ','
                << format_double(e.estimate) << ',' << format_double(e.std_error) << ','
                << e.count << ',' << estimator_name(e.estimator) << ','
                << (e.low_count ? "true" : "false") << ','
                << (std::abs(e.estimate) > 1.0 ? "true" : "false") << '\n';
        }
    };
    out << "# correlations\n";
    correlation_block(r.correlations);
    out << "# correlations_self_normalized\n";
    correlation_block(r.correlations_self_normalized);
    if (r.chsh.has_value()) {
        const analysis::ChshResult& c = *r.chsh;
        out << "# chsh\na,a_prime,b,b_prime,e_ab,e_ab_prime,e_a_prime_b,e_a_prime_b_prime,"
               "statistic,bound,violated,margin_sigma\n";
        out << format_double(c.a.radians()) << ',' << format_double(c.a_prime.radians()) << ','
            << format_double(c.b.radians()) << ',' << format_double(c.b_prime.radians()) << ','
            << format_double(c.estimates[0].estimate) << ','
            << format_double(c.estimates[1].estimate) << ','
            << format_double(c.estimates[2].estimate) << ','
            << format_double(c.estimates[3].estimate) << ',' << format_double(c.statistic) << ','
            << format_double(c.bound) << ',' << (c.violated ? "true" : "false") << ','
            << format_double(c.margin_sigma) << '\n';
    }
    if (!r.bell1964.empty()) {
        out << "# bell1964\na,b,c,e_ab,e_ac,e_bc,slack,violated,margin_sigma\n";
        for (const analysis::Bell1964Result& b : r.bell1964) {
            out << format_double(b.a.radians()) << ',' << format_double(b.b.radians()) << ','
                << format_double(b.c.radians()) << ',' << format_double(b.e_ab) << ','
                << format_double(b.e_ac) << ',' << format_double(b.e_bc) << ','
                << format_double(b.slack) << ',' << (b.violated ? "true" : "false") << ','
                << format_double(b.margin_sigma) << '\n';
        }
    }
    out << "# marginals\nstation,estimate,stderr,count\n";
    for (int s = 0; s < 2; ++s) {
        out << (s + 1) << ',' << format_double(r.marginals[s].estimate) << ','
            << format_double(r.marginals[s].std_error) << ',' << r.marginals[s].count << '\n';
    }
    out << "# weight_product\nestimate,stderr,count\n";
    out << format_double(r.weight_product.estimate) << ','
        << format_double(r.weight_product.std_error) << ',' << r.weight_product.count << '\n';
    return out.str();
}

void emit_report(const Report& r, Format format, std::ostream& out) {
    out << (format == Format::json ? report_json_text(r) : report_csv_text(r));
    if (!out) {
        throw Error("report emission failed: output stream in error state");
    }
}

std::string plot_data_text(const Report& r) {
    using parse::format_double;
    // delta -> plain estimate, sorted; duplicate deltas (same difference from
    // different pairs) all appear.
    std::vector<std::pair<double, double>> points;
    for (const analysis::CorrelationEstimate& e : r.correlations) {
        if (e.estimator != analysis::Estimator::plain) {
            continue;
        }
        points.emplace_back(model::Angle(e.b.radians() - e.a.radians()).radians(), e.estimate);
    }
    std::sort(points.begin(), points.end());

    std::ostringstream out;
    out << "# series estimates\ndelta,estimate\n";
    for (const auto& [delta, estimate] : points) {
        out << format_double(delta) << ',' << format_double(estimate) << '\n';
    }
    out << "# series reference\ndelta,-cos(delta)\n";
    constexpr int kSamples = 256;
    for (int i = 0; i <= kSamples; ++i) {
        const double delta = kTwoPi * i / kSamples;
        out << format_double(delta) << ',' << format_double(-std::cos(delta)) << '\n';
    }
    return out.str();
}

}  // namespace chameleon::report
