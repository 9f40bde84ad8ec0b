#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chameleon::parse {

/// Parses an angle given either as a decimal in radians or as a rational
/// multiple of pi ("pi", "pi/4", "3pi/4", "-pi/2", "0.5pi"). The pi forms
/// exist because the interesting test settings are pi-rational and decimal
/// truncation would blur exact-symmetry checks. Throws ParseError.
double parse_angle(std::string_view text);

/// Comma-separated list of angles.
std::vector<double> parse_angle_list(std::string_view text);

/// 64-bit seed, decimal or 0x-prefixed hex. Throws ParseError.
std::uint64_t parse_seed(std::string_view text);

/// Lowercase 0x-prefixed hex, the format used in record headers and configs.
std::string format_seed_hex(std::uint64_t seed);

/// Shortest decimal that round-trips the double exactly.
std::string format_double(double value);

/// Strict double parse of a complete token. Throws ParseError.
double parse_double(std::string_view text);

/// Strict unsigned integer parse of a complete token. Throws ParseError.
std::uint64_t parse_u64(std::string_view text);

}  // namespace chameleon::parse
