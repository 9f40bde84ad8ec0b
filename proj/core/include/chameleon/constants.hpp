#pragma once

namespace chameleon {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

// sqrt(2*pi), correctly rounded to double
inline constexpr double kSqrtTwoPi = 2.5066282746310002;

}  // namespace chameleon
