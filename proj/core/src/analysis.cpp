#include "chameleon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "chameleon/errors.hpp"

namespace chameleon::analysis {

namespace {

/// Both stations must have measured exactly the same trials in the same
/// order; anything else means the record sets were not produced by one run.
void check_alignment(const station::RecordSet& r1, const station::RecordSet& r2) {
    if (r1.records.size() != r2.records.size()) {
        throw PairingError("record sets differ in length: " +
                           std::to_string(r1.records.size()) + " vs " +
                           std::to_string(r2.records.size()));
    }
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
        if (r1.records[i].trial != r2.records[i].trial) {
            throw PairingError("misaligned trial indices at position " + std::to_string(i));
        }
    }
}

MeanEstimate mean_and_stderr(const std::vector<double>& values) {
    MeanEstimate m;
    m.count = values.size();
    if (values.empty()) {
        return m;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    m.estimate = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            const double d = v - m.estimate;
            ss += d * d;
        }
        const double var = ss / static_cast<double>(values.size() - 1);
        m.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    return m;
}

}  // namespace

CorrelationEstimate estimate_correlation(const station::RecordSet& r1,
                                         const station::RecordSet& r2,
                                         const TrialPredicate& selection, Estimator estimator) {
    check_alignment(r1, r2);

    CorrelationEstimate est;
    est.estimator = estimator;

    bool have_settings = false;
    std::vector<double> products;   // s1*s2*w1*w2 per selected trial
    std::vector<double> weights;    // w1*w2 per selected trial
    products.reserve(r1.records.size());
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
        const station::MeasurementRecord& m1 = r1.records[i];
        const station::MeasurementRecord& m2 = r2.records[i];
        if (selection && !selection(m1.trial)) {
            continue;
        }
        if (!have_settings) {
            est.a = model::Angle(m1.setting);
            est.b = model::Angle(m2.setting);
            have_settings = true;
        } else if (m1.setting != est.a.radians() || m2.setting != est.b.radians()) {
            throw GroupingError("selection mixes settings: station setting changed at trial " +
                                std::to_string(m1.trial));
        }
        const double w = m1.weight * m2.weight;
        products.push_back(m1.sign * m2.sign * w);
        weights.push_back(w);
    }
    if (products.empty()) {
        throw InsufficientDataError("empty selection: no trials to estimate from");
    }

    est.count = products.size();
    const std::size_t n = products.size();
    if (estimator == Estimator::plain) {
        const MeanEstimate m = mean_and_stderr(products);
        est.estimate = m.estimate;
        est.std_error = m.std_error;
    } else {
        double sum_x = 0.0;
        double sum_w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_x += products[i];
            sum_w += weights[i];
        }
        const double ratio = sum_x / sum_w;
        est.estimate = ratio;
        if (n > 1) {
            // Delta method for the ratio estimator.
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = products[i] - ratio * weights[i];
                ss += d * d;
            }
            est.std_error = std::sqrt(ss * static_cast<double>(n) /
                                      static_cast<double>(n - 1)) /
                            sum_w;
        }
    }
    return est;
}

double chsh_statistic(double e_ab, double e_ab_prime, double e_a_prime_b,
                      double e_a_prime_b_prime) {
    for (double e : {e_ab, e_ab_prime, e_a_prime_b, e_a_prime_b_prime}) {
        if (!std::isfinite(e)) {
            throw ArgumentError("chsh_statistic: non-finite correlation estimate");
        }
    }
    return std::abs(e_ab - e_ab_prime) + std::abs(e_a_prime_b + e_a_prime_b_prime);
}

std::pair<double, bool> bell1964_check(double e_ab, double e_ac, double e_bc) {
    const double slack = 1.0 + e_bc - std::abs(e_ab - e_ac);
    return {slack, slack < 0.0};
}

std::vector<CorrelationEstimate> ekert_group_correlations(const station::RecordSet& r1,
                                                          const station::RecordSet& r2,
                                                          std::uint64_t min_count,
                                                          Estimator estimator) {
    check_alignment(r1, r2);

    // Settings flow through unchanged from policy to record, so exact double
    // equality is the right group key.
    std::map<std::pair<double, double>, std::vector<std::uint64_t>> groups;
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
        groups[{r1.records[i].setting, r2.records[i].setting}].push_back(r1.records[i].trial);
    }

    std::vector<CorrelationEstimate> out;
    out.reserve(groups.size());
    for (const auto& [key, trials] : groups) {
        std::unordered_set<std::uint64_t> members(trials.begin(), trials.end());
        CorrelationEstimate est = estimate_correlation(
            r1, r2, [&members](std::uint64_t t) { return members.contains(t); }, estimator);
        est.low_count = est.count < min_count;
        out.push_back(est);
    }
    return out;
}

std::array<MeanEstimate, 2> weighted_marginals(const station::RecordSet& r1,
                                               const station::RecordSet& r2) {
    check_alignment(r1, r2);
    std::vector<double> m1;
    std::vector<double> m2;
    m1.reserve(r1.records.size());
    m2.reserve(r1.records.size());
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
        const double w = r1.records[i].weight * r2.records[i].weight;
        m1.push_back(r1.records[i].sign * w);
        m2.push_back(r2.records[i].sign * w);
    }
    return {mean_and_stderr(m1), mean_and_stderr(m2)};
}

MeanEstimate mean_weight_product(const station::RecordSet& r1, const station::RecordSet& r2) {
    check_alignment(r1, r2);
    std::vector<double> w;
    w.reserve(r1.records.size());
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
        w.push_back(r1.records[i].weight * r2.records[i].weight);
    }
    return mean_and_stderr(w);
}

ChshResult chsh_result(model::Angle a, model::Angle a_prime, model::Angle b,
                       model::Angle b_prime,
                       const std::array<CorrelationEstimate, 4>& estimates) {
    ChshResult r;
    r.a = a;
    r.a_prime = a_prime;
    r.b = b;
    r.b_prime = b_prime;
    r.estimates = estimates;
    r.statistic = chsh_statistic(estimates[0].estimate, estimates[1].estimate,
                                 estimates[2].estimate, estimates[3].estimate);
    r.violated = r.statistic > r.bound;
    double var = 0.0;
    for (const CorrelationEstimate& e : estimates) {
        var += e.std_error * e.std_error;
    }
    r.margin_sigma = var > 0.0 ? (r.statistic - r.bound) / std::sqrt(var) : 0.0;
    return r;
}

Bell1964Result bell1964_result(model::Angle a, model::Angle b, model::Angle c,
                               const CorrelationEstimate& ab, const CorrelationEstimate& ac,
                               const CorrelationEstimate& bc) {
    Bell1964Result r;
    r.a = a;
    r.b = b;
    r.c = c;
    r.e_ab = ab.estimate;
    r.e_ac = ac.estimate;
    r.e_bc = bc.estimate;
    const auto [slack, violated] = bell1964_check(r.e_ab, r.e_ac, r.e_bc);
    r.slack = slack;
    r.violated = violated;
    const double var = ab.std_error * ab.std_error + ac.std_error * ac.std_error +
                       bc.std_error * bc.std_error;
    r.margin_sigma = var > 0.0 ? -slack / std::sqrt(var) : 0.0;
    return r;
}

}  // namespace chameleon::analysis
