#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chameleon/constants.hpp"

namespace chameleon::prng {

// SplitMix64 (Steele, Lea, Flood / Vigna). Chosen because it is the smallest
// well-documented 64-bit generator with published test vectors, so two
// independently written stations can agree on the shared state sequence
// bit for bit. Pure value-semantics state machine; no shared state.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

struct SeedState {
    std::uint64_t state = 0;

    friend bool operator==(SeedState, SeedState) = default;
};

struct RawStep {
    SeedState next;
    std::uint64_t value;
};

/// Advances the state by one step and returns the 64-bit output.
constexpr RawStep next_raw(SeedState s) {
    s.state += kGoldenGamma;
    std::uint64_t z = s.state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return {s, z ^ (z >> 31)};
}

/// k-th output (0-based) of the stream started from `seed`. A pure function
/// of (seed, k): the state after k steps is seed + k*gamma.
constexpr std::uint64_t raw_at(std::uint64_t seed, std::uint64_t k) {
    return next_raw(SeedState{seed + k * kGoldenGamma}).value;
}

/// Maps a raw 64-bit word onto the circle: lambda = 2*pi * (x >> 11) * 2^-53.
/// Uses the top 53 bits so the double result is identical on every IEEE-754
/// implementation; the result is strictly inside [0, 2*pi).
constexpr double u64_to_angle(std::uint64_t x) {
    return kTwoPi * (static_cast<double>(x >> 11) * 0x1.0p-53);
}

/// The shared hidden-state sequence both stations consume. Element k depends
/// only on (seed, k); byte-identical across runs, processes and platforms.
inline std::vector<double> hidden_state_stream(std::uint64_t seed, std::size_t n) {
    std::vector<double> out;
    out.reserve(n);
    SeedState s{seed};
    for (std::size_t i = 0; i < n; ++i) {
        auto [next, value] = next_raw(s);
        s = next;
        out.push_back(u64_to_angle(value));
    }
    return out;
}

}  // namespace chameleon::prng
