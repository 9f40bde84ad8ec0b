#include "chameleon/model.hpp"

#include <cmath>

#include "chameleon/errors.hpp"

namespace chameleon::model {

double Angle::normalize(double radians) {
    double r = std::fmod(radians, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    // fmod dust: a tiny negative remainder plus 2*pi can round to 2*pi
    // exactly, and -0.0 should not leak into serialized output.
    if (r >= kTwoPi || r == 0.0) {
        r = 0.0;
    }
    return r;
}

int observable_station1(Angle a, HiddenState lambda) {
    return sgn(std::cos(lambda - a.radians()));
}

int observable_station2(Angle b, HiddenState lambda) {
    return -observable_station1(b, lambda);
}

double weight_station1(Angle a, HiddenState lambda) {
    return 0.25 * kSqrtTwoPi * std::abs(std::cos(lambda - a.radians()));
}

double weight_station2(Angle /*b*/, HiddenState /*lambda*/) {
    return kSqrtTwoPi;
}

double closed_form_correlation(Angle a, Angle b) {
    return -std::cos(b.radians() - a.radians());
}

namespace {

// integral_0^t |cos u| du in closed form: |cos| has period pi with integral
// 2 per period, and between kinks the antiderivative is a shifted sine.
// With k = floor(t/pi + 1/2) the value is 2k + sin(t - k*pi).
double abs_cos_antiderivative(double t) {
    const double k = std::floor(t / kPi + 0.5);
    return 2.0 * k + std::sin(t - k * kPi);
}

}  // namespace

double transport_map_station1(Angle a, double lambda) {
    return 0.25 * kSqrtTwoPi *
           (abs_cos_antiderivative(lambda - a.radians()) - abs_cos_antiderivative(-a.radians()));
}

double transport_map_station2(double lambda) {
    return kSqrtTwoPi * lambda;
}

double invert_transport_station1(Angle a, double y) {
    constexpr double kSlack = 1e-12;
    const double y_max = kSqrtTwoPi;
    if (!(y >= -kSlack && y <= y_max + kSlack)) {
        throw DomainError("invert_transport_station1: y outside [0, sqrt(2*pi)]");
    }
    if (y <= 0.0) {
        return 0.0;
    }
    if (y >= y_max) {
        return kTwoPi;
    }
    // The map is continuous, nondecreasing, and strictly increasing except at
    // the isolated zeros of the density, so the set {lambda : T(lambda) >= y}
    // is a half-line; bisection on its indicator converges to the smallest
    // preimage.
    double lo = 0.0;
    double hi = kTwoPi;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (transport_map_station1(a, mid) >= y) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

LocalDynamics station1_dynamics(Angle a) {
    return LocalDynamics{
        [a](double lambda) { return transport_map_station1(a, lambda); },
        [a](double lambda) { return weight_station1(a, lambda); },
    };
}

LocalDynamics station2_dynamics() {
    return LocalDynamics{
        [](double lambda) { return transport_map_station2(lambda); },
        [](double) { return kSqrtTwoPi; },
    };
}

Observable2 local_dynamics_apply(const LocalDynamics& d1, const LocalDynamics& d2,
                                 Observable2 f) {
    return [t1 = d1.transport, tau1 = d1.density, t2 = d2.transport, tau2 = d2.density,
            f = std::move(f)](double u, double v) {
        return tau1(u) * f(t1(u), t2(v)) * tau2(v);
    };
}

}  // namespace chameleon::model
