#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chameleon/analysis.hpp"
#include "chameleon/protocol.hpp"

namespace chameleon::report {

struct Report {
    std::string run_id;
    std::string mode;  // "single" | "chsh" | "ekert"
    // One plain-estimator row per observed setting pair, sorted by (a, b).
    std::vector<analysis::CorrelationEstimate> correlations;
    // The same groups through the self-normalized estimator, as a diagnostic.
    std::vector<analysis::CorrelationEstimate> correlations_self_normalized;
    std::optional<analysis::ChshResult> chsh;
    std::vector<analysis::Bell1964Result> bell1964;
    std::array<analysis::MeanEstimate, 2> marginals;
    analysis::MeanEstimate weight_product;
};

enum class Format { json, csv };

/// Statistics for one completed run. For chsh mode the four configured pairs
/// must all be present in the records; for ekert mode every angle triple with
/// complete pair estimates gets a 1964-inequality row.
Report build_report(const protocol::RunConfig& cfg, const station::RecordSet& r1,
                    const station::RecordSet& r2);

/// Reads manifest.json plus both record files from a run directory, verifies
/// the manifest hashes and record counts (IntegrityError on mismatch), and
/// rebuilds the report. Refuses aborted runs.
Report analyze_artifacts(const std::filesystem::path& dir);

/// Canonical JSON text: fixed key order, two-space indent, trailing newline.
/// Re-emitting the same report yields identical bytes.
std::string report_json_text(const Report& r);

/// CSV mirror of the report rows, one block per section.
std::string report_csv_text(const Report& r);

void emit_report(const Report& r, Format format, std::ostream& out);

/// Plot data: the estimate-vs-delta series (delta = b - a mod 2*pi) followed
/// by a sampled -cos(delta) reference series.
std::string plot_data_text(const Report& r);

}  // namespace chameleon::report
