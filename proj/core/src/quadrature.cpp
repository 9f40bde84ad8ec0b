#include "chameleon/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "chameleon/errors.hpp"

namespace chameleon::quadrature {

namespace {

GaussRule make_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n with the Chebyshev-like initial guess; only the
    // lower half is computed, the rest follows by symmetry.
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) {
                break;
            }
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

double panel_sum(const std::function<double(double)>& f, double x0, double x1, int panels,
                 const GaussRule& rule) {
    const double h = (x1 - x0) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = x0 + p * h;
        const double mid = a + 0.5 * h;
        const double scale = 0.5 * h;
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double v = f(mid + scale * rule.nodes[i]);
            if (!std::isfinite(v)) {
                throw EvaluationError("integrate_piecewise: non-finite integrand value");
            }
            acc += rule.weights[i] * v;
        }
        total += scale * acc;
    }
    return total;
}

double integrate_smooth(const std::function<double(double)>& f, double x0, double x1,
                        double tol, const Options& opts, const GaussRule& rule) {
    int panels = opts.initial_panels;
    double prev = panel_sum(f, x0, x1, panels, rule);
    for (int d = 0; d < opts.max_doublings; ++d) {
        panels *= 2;
        const double cur = panel_sum(f, x0, x1, panels, rule);
        if (std::abs(cur - prev) <= tol) {
            return cur;
        }
        prev = cur;
    }
    throw EvaluationError("integrate_piecewise: refinement did not converge");
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, make_rule(n)).first;
    }
    return it->second;
}

double integrate_piecewise(const PiecewiseIntegrand& f, double lo, double hi, double tol,
                           const Options& opts) {
    if (!(lo <= hi)) {
        throw ConfigError("integrate_piecewise: lo > hi");
    }
    if (!(tol > 0.0)) {
        throw ConfigError("integrate_piecewise: tol must be positive");
    }
    if (lo == hi) {
        return 0.0;
    }
    std::vector<double> cuts;
    cuts.push_back(lo);
    for (double b : f.breakpoints) {
        if (b > lo && b < hi) {
            cuts.push_back(b);
        }
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const GaussRule& rule = gauss_legendre(opts.order);
    const double total_len = hi - lo;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double piece_tol = tol * (cuts[i + 1] - cuts[i]) / total_len;
        total += integrate_smooth(f.function, cuts[i], cuts[i + 1], piece_tol, opts, rule);
    }
    return total;
}

std::vector<double> setting_breakpoints(std::initializer_list<model::Angle> settings) {
    std::vector<double> bps;
    for (model::Angle x : settings) {
        bps.push_back(model::Angle(x.radians() + 0.5 * kPi).radians());
        bps.push_back(model::Angle(x.radians() - 0.5 * kPi).radians());
    }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    return bps;
}

double correlation_quadrature(model::Angle a, model::Angle b, double tol) {
    PiecewiseIntegrand g{
        [a, b](double lam) {
            return model::observable_station1(a, lam) * model::observable_station2(b, lam) *
                   model::weight_station1(a, lam) * model::weight_station2(b, lam) / kTwoPi;
        },
        setting_breakpoints({a, b}),
    };
    return integrate_piecewise(g, 0.0, kTwoPi, tol);
}

double normalization_quadrature(model::Angle a, model::Angle b, double tol) {
    PiecewiseIntegrand g{
        [a, b](double lam) {
            return model::weight_station1(a, lam) * model::weight_station2(b, lam) / kTwoPi;
        },
        setting_breakpoints({a}),
    };
    return integrate_piecewise(g, 0.0, kTwoPi, tol);
}

double marginal_quadrature(int station, model::Angle a, model::Angle b, double tol) {
    if (station != 1 && station != 2) {
        throw ConfigError("marginal_quadrature: station must be 1 or 2");
    }
    PiecewiseIntegrand g{
        [station, a, b](double lam) {
            const double s = station == 1 ? model::observable_station1(a, lam)
                                          : model::observable_station2(b, lam);
            return s * model::weight_station1(a, lam) * model::weight_station2(b, lam) / kTwoPi;
        },
        setting_breakpoints({a, b}),
    };
    return integrate_piecewise(g, 0.0, kTwoPi, tol);
}

double correlation_change_of_variables(model::Angle a, model::Angle b, double tol) {
    // In mu = T2(lambda) coordinates the singlet delta pins the station-1
    // coordinate to T1(T2^-1(mu)); evaluating the station-1 observable at
    // that point goes through the numerical transport inverse, while the
    // delta's Jacobian contributes the station-1 density.
    const double hi = model::transport_map_station2(kTwoPi);
    PiecewiseIntegrand g{
        [a, b](double mu) {
            const double lam2 = mu / kSqrtTwoPi;  // T2^-1, linear so exact
            const double nu = model::transport_map_station1(a, lam2);
            const double lam1 = model::invert_transport_station1(a, nu);
            return model::observable_station1(a, lam1) * model::observable_station2(b, lam2) *
                   model::weight_station1(a, lam2) / kTwoPi;
        },
        {},
    };
    for (double bp : setting_breakpoints({a, b})) {
        g.breakpoints.push_back(model::transport_map_station2(bp));
    }
    return integrate_piecewise(g, 0.0, hi, tol);
}

}  // namespace chameleon::quadrature
