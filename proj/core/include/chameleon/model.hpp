#pragma once

#include <compare>
#include <functional>

#include "chameleon/constants.hpp"

namespace chameleon::model {

/// An analyzer setting or state-space point, stored reduced mod 2*pi
/// into [0, 2*pi). All trigonometry is evaluated on the reduced value.
class Angle {
  public:
    constexpr Angle() = default;
    explicit Angle(double radians) : value_(normalize(radians)) {}

    double radians() const { return value_; }

    static double normalize(double radians);

    friend auto operator<=>(const Angle&, const Angle&) = default;

  private:
    double value_ = 0.0;
};

/// The hidden variable of one trial: an angle in [0, 2*pi) shared by both
/// stations as common input.
using HiddenState = double;

/// Sign with the fixed tie convention sgn(0) = +1. The tie set has measure
/// zero, so the convention changes no integral, but a pinned choice is
/// required for bit-reproducible records.
inline int sgn(double x) {
    return x >= 0.0 ? +1 : -1;
}

/// Station-1 observable: sgn(cos(lambda - a)).
int observable_station1(Angle a, HiddenState lambda);

/// Station-2 observable, the singlet condition: -sgn(cos(lambda - b)).
int observable_station2(Angle b, HiddenState lambda);

/// Station-1 dynamical weight: (sqrt(2*pi)/4) * |cos(lambda - a)|.
double weight_station1(Angle a, HiddenState lambda);

/// Station-2 dynamical weight: the constant sqrt(2*pi).
double weight_station2(Angle b, HiddenState lambda);

/// The correlation both estimators must reproduce: -cos(b - a).
double closed_form_correlation(Angle a, Angle b);

/// Station-1 transport map, the antiderivative of the station-1 weight:
/// T(lambda) = (sqrt(2*pi)/4) * integral_0^lambda |cos(u - a)| du,
/// evaluated in closed form piecewise. Nondecreasing; maps [0, 2*pi]
/// onto [0, sqrt(2*pi)].
double transport_map_station1(Angle a, double lambda);

/// Station-2 transport map: sqrt(2*pi) * lambda (the constant-weight case).
double transport_map_station2(double lambda);

/// Inverse of the station-1 transport by bisection on the monotone map.
/// Guarantees |transport_map_station1(a, result) - y| <= 1e-12; at the
/// isolated zeros of the density the smallest preimage is returned.
/// Throws DomainError when y lies outside [0, sqrt(2*pi)] (inputs within
/// 1e-12 of the boundary are clamped).
double invert_transport_station1(Angle a, double y);

/// One particle's reduced dynamics: a monotone transport map on states plus
/// the density that weights each trial (the transport's derivative wherever
/// it exists).
struct LocalDynamics {
    std::function<double(double)> transport;
    std::function<double(double)> density;
};

/// The reduced dynamics of station 1 at setting a: transport T with density
/// (sqrt(2*pi)/4)|cos(. - a)|.
LocalDynamics station1_dynamics(Angle a);

/// The reduced dynamics of station 2: linear transport with constant
/// density sqrt(2*pi); the setting does not enter.
LocalDynamics station2_dynamics();

using Observable2 = std::function<double(double, double)>;

/// The locality combinator: lifts two single-particle dynamics to the pair,
/// (u, v) -> tau1(u) * F(T1 u, T2 v) * tau2(v). Factorizes over product
/// observables: applying it to f (x) g equals [tau1 * (f . T1)] (x)
/// [(g . T2) * tau2] pointwise.
Observable2 local_dynamics_apply(const LocalDynamics& d1, const LocalDynamics& d2,
                                 Observable2 f);

}  // namespace chameleon::model
