#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace chameleon::station {

/// One station's output for one trial. The weight stores the raw dynamical
/// density value; the (2*pi)^-1 measure normalization lives entirely in the
/// estimator so nothing is counted twice.
struct MeasurementRecord {
    std::uint64_t trial = 0;
    double setting = 0.0;  // resolved analyzer angle, radians in [0, 2*pi)
    int sign = 0;          // -1 or +1
    double weight = 0.0;   // >= 0

    friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

/// A complete station output with the metadata needed to interpret it.
/// Trial indices are strictly increasing.
struct RecordSet {
    int role = 1;  // 1 or 2
    std::uint64_t seed = 0;
    std::vector<MeasurementRecord> records;

    friend bool operator==(const RecordSet&, const RecordSet&) = default;
};

// Record file format (UTF-8, newline-delimited):
//   # chameleon-records v1 role=<1|2> seed=<hex> n=<count>
//   <trial>,<setting>,<sign>,<weight>
// Settings and weights are printed as the shortest decimal that round-trips
// the underlying double, so write/read is lossless bit for bit.

void write_records(const RecordSet& rs, std::ostream& out);
void write_records(const RecordSet& rs, const std::filesystem::path& path);

/// Throws ParseError (with line number and source name) on malformed input,
/// IntegrityError on non-monotone trial indices or a count mismatch.
RecordSet read_records(std::istream& in, std::string_view source_name = "<stream>");
RecordSet read_records(const std::filesystem::path& path);

}  // namespace chameleon::station
