#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "chameleon/model.hpp"
#include "chameleon/records.hpp"

namespace chameleon::analysis {

// The estimators are the Monte-Carlo form of the model's correlation
// integral: the (2*pi)^-1 integral d(lambda) over uniform hidden states
// becomes an empirical mean of s1*s2*w1*w2 over trials. The plain estimator
// is primary; the self-normalized variant (divide by the mean weight product
// instead of by n) is a diagnostic, since sum(w1*w2)/n fluctuates around 1.

enum class Estimator { plain, self_normalized };

struct CorrelationEstimate {
    model::Angle a, b;
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t count = 0;
    Estimator estimator = Estimator::plain;
    bool low_count = false;
};

using TrialPredicate = std::function<bool(std::uint64_t)>;

/// Weighted correlation estimate over the selected trials.
///   plain:            mean of s1*s2*w1*w2, stderr = sd/sqrt(n)
///   self-normalized:  sum(s1*s2*w1*w2)/sum(w1*w2), delta-method stderr
/// A null predicate selects everything. Throws PairingError when the two
/// record sets do not carry identical trial indices, GroupingError when the
/// selection mixes settings, InsufficientDataError on an empty selection.
/// Weighted estimates may stochastically exceed |1|; values are reported raw.
CorrelationEstimate estimate_correlation(const station::RecordSet& r1,
                                         const station::RecordSet& r2,
                                         const TrialPredicate& selection,
                                         Estimator estimator = Estimator::plain);

/// |E(a,b) - E(a,b')| + |E(a',b) + E(a',b')|; the classical bound is 2.
/// Throws ArgumentError on non-finite input.
double chsh_statistic(double e_ab, double e_ab_prime, double e_a_prime_b,
                      double e_a_prime_b_prime);

/// The 1964 singlet inequality |E(a,b) - E(a,c)| <= 1 + E(b,c), returned as
/// (slack, violated) with slack = 1 + E(b,c) - |E(a,b) - E(a,c)|.
std::pair<double, bool> bell1964_check(double e_ab, double e_ac, double e_bc);

/// Partitions aligned records by the observed setting pair and estimates each
/// group; groups below min_count are flagged. Output is sorted by (a, b).
std::vector<CorrelationEstimate> ekert_group_correlations(const station::RecordSet& r1,
                                                          const station::RecordSet& r2,
                                                          std::uint64_t min_count = 100,
                                                          Estimator estimator = Estimator::plain);

struct MeanEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t count = 0;
};

/// The no-signaling diagnostics at the statistics level: means of s1*w1*w2
/// and s2*w1*w2 over all trials, both expected to sit at 0.
std::array<MeanEstimate, 2> weighted_marginals(const station::RecordSet& r1,
                                               const station::RecordSet& r2);

/// Mean of the weight product w1*w2 with its standard error; the model's
/// normalization makes this converge to 1.
MeanEstimate mean_weight_product(const station::RecordSet& r1, const station::RecordSet& r2);

struct ChshResult {
    model::Angle a, a_prime, b, b_prime;
    // Order: (a,b), (a,b'), (a',b), (a',b').
    std::array<CorrelationEstimate, 4> estimates;
    double statistic = 0.0;
    double bound = 2.0;
    bool violated = false;
    double margin_sigma = 0.0;  // (statistic - bound) / combined stderr
};

/// Assembles the CHSH statistic from four per-pair estimates.
ChshResult chsh_result(model::Angle a, model::Angle a_prime, model::Angle b,
                       model::Angle b_prime, const std::array<CorrelationEstimate, 4>& estimates);

struct Bell1964Result {
    model::Angle a, b, c;
    double e_ab = 0.0, e_ac = 0.0, e_bc = 0.0;
    double slack = 0.0;
    bool violated = false;
    double margin_sigma = 0.0;  // -slack / combined stderr; >= 5 means a solid violation
};

Bell1964Result bell1964_result(model::Angle a, model::Angle b, model::Angle c,
                               const CorrelationEstimate& ab, const CorrelationEstimate& ac,
                               const CorrelationEstimate& bc);

}  // namespace chameleon::analysis
