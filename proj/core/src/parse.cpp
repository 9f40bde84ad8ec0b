#include "chameleon/parse.hpp"

#include <charconv>
#include <cstdio>

#include "chameleon/constants.hpp"
#include "chameleon/errors.hpp"

namespace chameleon::parse {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

double parse_double(std::string_view text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("bad number: '" + std::string(text) + "'");
    }
    return value;
}

std::uint64_t parse_u64(std::string_view text) {
    std::uint64_t value = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("bad unsigned integer: '" + std::string(text) + "'");
    }
    return value;
}

double parse_angle(std::string_view text) {
    std::string_view s = trim(text);
    if (s.empty()) {
        throw ParseError("empty angle");
    }
    const std::size_t pi_pos = s.find("pi");
    if (pi_pos == std::string_view::npos) {
        return parse_double(s);
    }

    double sign = 1.0;
    std::string_view head = s.substr(0, pi_pos);
    if (!head.empty() && (head.front() == '+' || head.front() == '-')) {
        sign = head.front() == '-' ? -1.0 : 1.0;
        head.remove_prefix(1);
    }
    const double numerator = head.empty() ? 1.0 : parse_double(head);

    std::string_view tail = s.substr(pi_pos + 2);
    double denominator = 1.0;
    if (!tail.empty()) {
        if (tail.front() != '/') {
            throw ParseError("bad angle: '" + std::string(text) + "'");
        }
        tail.remove_prefix(1);
        denominator = parse_double(tail);
        if (denominator == 0.0) {
            throw ParseError("bad angle (division by zero): '" + std::string(text) + "'");
        }
    }
    return sign * numerator * kPi / denominator;
}

std::vector<double> parse_angle_list(std::string_view text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) {
            comma = text.size();
        }
        out.push_back(parse_angle(text.substr(pos, comma - pos)));
        pos = comma + 1;
        if (comma == text.size()) {
            break;
        }
    }
    return out;
}

std::uint64_t parse_seed(std::string_view text) {
    std::string_view s = trim(text);
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        s.remove_prefix(2);
        base = 16;
    }
    if (s.empty()) {
        throw ParseError("bad seed: '" + std::string(text) + "'");
    }
    std::uint64_t value = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value, base);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("bad seed: '" + std::string(text) + "'");
    }
    return value;
}

std::string format_seed_hex(std::uint64_t seed) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(seed));
    return buf;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw Error("format_double failed");
    }
    return std::string(buf, ptr);
}

}  // namespace chameleon::parse
