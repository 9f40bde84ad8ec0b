#include "chameleon/station.hpp"

#include <algorithm>
#include <string>

#include "chameleon/errors.hpp"
#include "chameleon/parse.hpp"
#include "chameleon/prng.hpp"

namespace chameleon::station {

SchedulePolicy make_schedule(std::vector<ScheduleRange> ranges) {
    std::sort(ranges.begin(), ranges.end(),
              [](const ScheduleRange& x, const ScheduleRange& y) { return x.begin < y.begin; });
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (ranges[i].end <= ranges[i].begin) {
            throw ConfigError("schedule range must satisfy begin < end");
        }
        if (i > 0 && ranges[i].begin < ranges[i - 1].end) {
            throw ConfigError("schedule ranges overlap");
        }
    }
    return SchedulePolicy{std::move(ranges)};
}

model::Angle resolve_angle(const AnglePolicy& policy, std::uint64_t trial) {
    return std::visit(
        [trial](const auto& p) -> model::Angle {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, FixedPolicy>) {
                return p.angle;
            } else if constexpr (std::is_same_v<P, SchedulePolicy>) {
                for (const ScheduleRange& r : p.ranges) {
                    if (trial >= r.begin && trial < r.end) {
                        return r.angle;
                    }
                }
                throw ScheduleError("trial " + std::to_string(trial) +
                                    " outside all schedule ranges");
            } else {
                if (p.choices.empty()) {
                    throw ConfigError("seeded-random policy has an empty choice list");
                }
                const std::uint64_t raw = prng::raw_at(p.choice_seed, trial);
                return p.choices[raw % p.choices.size()];
            }
        },
        policy);
}

RecordSet run_station(int role, std::uint64_t seed, std::uint64_t n, const AnglePolicy& policy) {
    if (role != 1 && role != 2) {
        throw ConfigError("station role must be 1 or 2");
    }
    RecordSet rs;
    rs.role = role;
    rs.seed = seed;
    rs.records.reserve(n);
    prng::SeedState s{seed};
    for (std::uint64_t k = 0; k < n; ++k) {
        auto [next, raw] = prng::next_raw(s);
        s = next;
        const double lambda = prng::u64_to_angle(raw);
        const model::Angle x = resolve_angle(policy, k);
        MeasurementRecord r;
        r.trial = k;
        r.setting = x.radians();
        if (role == 1) {
            r.sign = model::observable_station1(x, lambda);
            r.weight = model::weight_station1(x, lambda);
        } else {
            r.sign = model::observable_station2(x, lambda);
            r.weight = model::weight_station2(x, lambda);
        }
        rs.records.push_back(r);
    }
    return rs;
}

AnglePolicy parse_policy(std::string_view spec) {
    try {
        if (spec.starts_with("fixed:")) {
            return FixedPolicy{model::Angle(parse::parse_angle(spec.substr(6)))};
        }
        if (spec.starts_with("schedule:")) {
            std::string_view body = spec.substr(9);
            std::vector<ScheduleRange> ranges;
            while (!body.empty()) {
                std::size_t comma = body.find(',');
                std::string_view item = body.substr(0, comma);
                body.remove_prefix(comma == std::string_view::npos ? body.size() : comma + 1);

                const std::size_t dash = item.find('-');
                const std::size_t colon = item.find(':', dash == std::string_view::npos ? 0 : dash);
                if (dash == std::string_view::npos || colon == std::string_view::npos) {
                    throw ConfigError("schedule item must look like begin-end:angle, got '" +
                                      std::string(item) + "'");
                }
                ranges.push_back(
                    {parse::parse_u64(item.substr(0, dash)),
                     parse::parse_u64(item.substr(dash + 1, colon - dash - 1)),
                     model::Angle(parse::parse_angle(item.substr(colon + 1)))});
            }
            if (ranges.empty()) {
                throw ConfigError("schedule policy needs at least one range");
            }
            return make_schedule(std::move(ranges));
        }
        if (spec.starts_with("random:")) {
            std::string_view body = spec.substr(7);
            const std::size_t at = body.rfind('@');
            if (at == std::string_view::npos) {
                throw ConfigError("random policy needs '@<seed>'");
            }
            SeededRandomPolicy p;
            p.choice_seed = parse::parse_seed(body.substr(at + 1));
            for (double v : parse::parse_angle_list(body.substr(0, at))) {
                p.choices.emplace_back(v);
            }
            if (p.choices.empty()) {
                throw ConfigError("random policy needs at least one angle");
            }
            return p;
        }
    } catch (const ParseError& e) {
        throw ConfigError("bad policy '" + std::string(spec) + "': " + e.what());
    }
    throw ConfigError("policy must start with fixed:, schedule: or random:, got '" +
                      std::string(spec) + "'");
}

}  // namespace chameleon::station
