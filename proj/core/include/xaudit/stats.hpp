#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace xaudit {

enum class PValueMethod { kExact, kNormalApprox };

struct DisparityResult {
    double u_statistic = 0.0; // U for the first sample, mid-rank ties
    double p_value = 1.0;     // two-sided, in (0, 1]
    bool significant = false; // p_value < alpha
    double alpha = 0.05;
    int n0 = 0;
    int n1 = 0;
    PValueMethod method = PValueMethod::kExact;
    // Tie- and continuity-corrected normal approximation, reported alongside
    // the Monte-Carlo permutation p when exhaustive enumeration is infeasible.
    double p_normal = std::numeric_limits<double>::quiet_NaN();
};

// Two-sided Mann-Whitney U test. The two-sided p doubles the smaller
// one-sided tail and caps at 1. When C(n0 + n1, n0) <= 12870 the permutation
// distribution is enumerated exhaustively over the observed pooled values
// (exact; covers the 5-vs-5 trial regime and handles ties via mid-ranks);
// otherwise 100000 seeded Monte-Carlo permutations are drawn and the normal
// approximation is reported alongside.
DisparityResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                               double alpha = 0.05, std::uint64_t mc_seed = 0);

// The disparity test proper: inputs are the per-trial group means (length =
// configured trial count each), not raw per-instance values.
DisparityResult test_disparity(std::span<const double> group0_means,
                               std::span<const double> group1_means, double alpha,
                               int expected_trials);

} // namespace xaudit
