#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "chameleon/model.hpp"
#include "chameleon/records.hpp"

namespace chameleon::station {

// A station's private rule assigning an analyzer angle to each trial index.
// Policies see only the trial index, never the hidden state and never
// anything about the other station - locality is enforced by the interface
// shape, not by discipline.

struct FixedPolicy {
    model::Angle angle;
};

struct ScheduleRange {
    std::uint64_t begin = 0;  // inclusive
    std::uint64_t end = 0;    // exclusive
    model::Angle angle;
};

struct SchedulePolicy {
    std::vector<ScheduleRange> ranges;  // sorted by begin, disjoint
};

struct SeededRandomPolicy {
    std::vector<model::Angle> choices;
    std::uint64_t choice_seed = 0;  // private stream, independent of the lambda stream
};

using AnglePolicy = std::variant<FixedPolicy, SchedulePolicy, SeededRandomPolicy>;

/// Sorts the ranges and validates that they are nonempty and disjoint.
/// Throws ConfigError otherwise. Coverage of [0, n) is checked lazily by
/// resolve_angle, which is where gaps actually bite.
SchedulePolicy make_schedule(std::vector<ScheduleRange> ranges);

/// Deterministic angle for a trial. For SeededRandom the choice for trial k
/// depends only on (choice_seed, k). Throws ScheduleError when the trial
/// falls outside every schedule range, ConfigError on an empty choice list.
model::Angle resolve_angle(const AnglePolicy& policy, std::uint64_t trial);

/// One full measurement pass: for each trial k with lambda_k from the shared
/// stream, resolve the setting, evaluate the role's observable and weight.
/// Output depends on nothing but (role, seed, n, policy); the signature
/// admits no channel to the other station.
RecordSet run_station(int role, std::uint64_t seed, std::uint64_t n, const AnglePolicy& policy);

/// Parses the CLI policy syntax:
///   fixed:<angle>
///   schedule:<begin>-<end>:<angle>[,<begin>-<end>:<angle>...]
///   random:<angle>[,<angle>...]@<seed>
/// Angles accept the same forms as everywhere else ("pi/4" or decimals).
/// Throws ConfigError on malformed specs.
AnglePolicy parse_policy(std::string_view spec);

}  // namespace chameleon::station
