#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "chameleon/model.hpp"

namespace chameleon::quadrature {

/// An integrand that is smooth (C^1) between consecutive breakpoints.
/// Breakpoints are the analytically known non-smooth abscissae; the
/// integrator never needs to hunt for them.
struct PiecewiseIntegrand {
    std::function<double(double)> function;
    std::vector<double> breakpoints;  // sorted angles where the function kinks or jumps
};

struct Options {
    int order = 16;           // Gauss-Legendre points per panel
    int initial_panels = 1;   // panels per smooth piece before refinement
    int max_doublings = 16;   // refinement budget per piece
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Returns the cached n-point rule; nodes are computed once by Newton
/// iteration on the Legendre polynomial. Thread-safe.
const GaussRule& gauss_legendre(int n);

/// Composite Gauss-Legendre per smooth piece, with per-piece panel doubling
/// until the change drops below the piece's share of `tol` (absolute).
/// Throws EvaluationError on non-finite integrand values or if a piece
/// fails to converge within the refinement budget.
double integrate_piecewise(const PiecewiseIntegrand& f, double lo, double hi, double tol,
                           const Options& opts = {});

/// Breakpoints of the sgn/|cos| family on [0, 2*pi]: {x +- pi/2 mod 2*pi}
/// for every setting x involved, sorted and deduplicated.
std::vector<double> setting_breakpoints(std::initializer_list<model::Angle> settings);

/// The correlation integral
///   (2*pi)^-1 * integral_0^{2*pi} S1_a S2_b T1'_a T2'_b dlambda
/// with the model's observables and weights; equals -cos(b-a).
double correlation_quadrature(model::Angle a, model::Angle b, double tol = 1e-8);

/// (2*pi)^-1 * integral of the weight product; the model is normalized so
/// this is 1 for every pair of settings.
double normalization_quadrature(model::Angle a, model::Angle b, double tol = 1e-10);

/// Weighted marginal of one station,
///   (2*pi)^-1 * integral S^(station) T1'_a T2'_b dlambda;
/// vanishes for the model (no-signaling diagnostic). `station` is 1 or 2.
double marginal_quadrature(int station, model::Angle a, model::Angle b, double tol = 1e-8);

/// The same correlation evaluated in evolved coordinates: substitute
/// mu = T2(lambda) (linear, hence exact), eliminate the singlet delta
/// symbolically, and recover the station-1 argument through the numerical
/// transport inverse. Agrees with correlation_quadrature within the
/// combined tolerance; the inversion is why the default tol is looser.
double correlation_change_of_variables(model::Angle a, model::Angle b, double tol = 1e-6);

}  // namespace chameleon::quadrature
