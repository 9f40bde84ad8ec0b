#include "chameleon/records.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "chameleon/constants.hpp"
#include "chameleon/errors.hpp"
#include "chameleon/parse.hpp"

namespace chameleon::station {

namespace {

constexpr std::string_view kHeaderPrefix = "# chameleon-records v1 ";

[[noreturn]] void parse_fail(std::string_view source, std::size_t line, const std::string& what) {
    throw ParseError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

/// Consumes "key=" from the front of s or fails.
std::string_view expect_key(std::string_view& s, std::string_view key, std::string_view source,
                            std::size_t line) {
    if (s.substr(0, key.size()) != key) {
        parse_fail(source, line, "expected '" + std::string(key) + "' in header");
    }
    s.remove_prefix(key.size());
    const std::size_t sp = s.find(' ');
    std::string_view value = s.substr(0, sp);
    s.remove_prefix(sp == std::string_view::npos ? s.size() : sp + 1);
    return value;
}

}  // namespace

void write_records(const RecordSet& rs, std::ostream& out) {
    out << kHeaderPrefix << "role=" << rs.role << " seed=" << parse::format_seed_hex(rs.seed)
        << " n=" << rs.records.size() << '\n';
    for (const MeasurementRecord& r : rs.records) {
        out << r.trial << ',' << parse::format_double(r.setting) << ',' << r.sign << ','
            << parse::format_double(r.weight) << '\n';
    }
}

void write_records(const RecordSet& rs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open for writing: " + path.string());
    }
    write_records(rs, out);
    out.flush();
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

RecordSet read_records(std::istream& in, std::string_view source_name) {
    std::string line;
    if (!std::getline(in, line)) {
        parse_fail(source_name, 1, "missing header line");
    }
    if (line.substr(0, kHeaderPrefix.size()) != kHeaderPrefix) {
        parse_fail(source_name, 1, "bad header, expected '" + std::string(kHeaderPrefix) + "...'");
    }

    RecordSet rs;
    std::uint64_t declared_n = 0;
    {
        std::string_view rest = std::string_view(line).substr(kHeaderPrefix.size());
        const std::string_view role_s = expect_key(rest, "role=", source_name, 1);
        const std::string_view seed_s = expect_key(rest, "seed=", source_name, 1);
        const std::string_view n_s = expect_key(rest, "n=", source_name, 1);
        try {
            rs.role = static_cast<int>(parse::parse_u64(role_s));
            rs.seed = parse::parse_seed(seed_s);
            declared_n = parse::parse_u64(n_s);
        } catch (const ParseError& e) {
            parse_fail(source_name, 1, e.what());
        }
        if (rs.role != 1 && rs.role != 2) {
            parse_fail(source_name, 1, "role must be 1 or 2");
        }
    }

    std::size_t line_no = 1;
    bool have_prev = false;
    std::uint64_t prev_trial = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::string_view fields[4];
        std::string_view s = line;
        for (int i = 0; i < 4; ++i) {
            const std::size_t comma = s.find(',');
            if (i < 3 && comma == std::string_view::npos) {
                parse_fail(source_name, line_no, "expected 4 comma-separated fields");
            }
            if (i == 3 && comma != std::string_view::npos) {
                parse_fail(source_name, line_no, "expected 4 comma-separated fields");
            }
            fields[i] = s.substr(0, comma);
            s.remove_prefix(comma == std::string_view::npos ? s.size() : comma + 1);
        }

        MeasurementRecord r;
        try {
            r.trial = parse::parse_u64(fields[0]);
            r.setting = parse::parse_double(fields[1]);
            r.weight = parse::parse_double(fields[3]);
        } catch (const ParseError& e) {
            parse_fail(source_name, line_no, e.what());
        }
        if (fields[2] == "1" || fields[2] == "+1") {
            r.sign = +1;
        } else if (fields[2] == "-1") {
            r.sign = -1;
        } else {
            parse_fail(source_name, line_no,
                       "sign must be -1 or +1, got '" + std::string(fields[2]) + "'");
        }
        if (!std::isfinite(r.setting) || r.setting < 0.0 || r.setting >= kTwoPi) {
            parse_fail(source_name, line_no, "setting outside [0, 2*pi)");
        }
        if (!std::isfinite(r.weight) || r.weight < 0.0) {
            parse_fail(source_name, line_no, "weight must be finite and >= 0");
        }
        if (have_prev && r.trial <= prev_trial) {
            throw IntegrityError(std::string(source_name) + ":" + std::to_string(line_no) +
                                 ": trial indices must be strictly increasing");
        }
        prev_trial = r.trial;
        have_prev = true;
        rs.records.push_back(r);
    }

    if (rs.records.size() != declared_n) {
        throw IntegrityError(std::string(source_name) + ": header declares n=" +
                             std::to_string(declared_n) + " but file holds " +
                             std::to_string(rs.records.size()) + " records");
    }
    return rs;
}

RecordSet read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open for reading: " + path.string());
    }
    return read_records(in, path.string());
}

}  // namespace chameleon::station
