#include "xaudit/stats.hpp"

#include "xaudit/errors.hpp"
#include "xaudit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

namespace xaudit {

namespace {

constexpr double kStatTolerance = 1e-9;
constexpr long long kExhaustiveLimit = 12870; // C(16, 8)
constexpr int kMonteCarloPermutations = 100000;

// Mid-ranks (ties averaged) for the pooled sample.
std::vector<double> midranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double average = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = average;
        i = j + 1;
    }
    return ranks;
}

double u_from_rank_sum(double rank_sum, int n0) {
    return rank_sum - 0.5 * static_cast<double>(n0) * static_cast<double>(n0 + 1);
}

// C(n, k) as a long long, saturating above the exhaustive limit.
long long combinations_capped(int n, int k) {
    double result = 1.0;
    for (int i = 1; i <= k; ++i) {
        result *= static_cast<double>(n - k + i) / static_cast<double>(i);
        if (result > 4.0 * static_cast<double>(kExhaustiveLimit)) {
            return kExhaustiveLimit + 1;
        }
    }
    return static_cast<long long>(std::llround(result));
}

// Tie- and continuity-corrected normal approximation for the two-sided p.
double normal_approx_p(double u, int n0, int n1, const std::vector<double>& pooled) {
    const double n = static_cast<double>(n0 + n1);
    const double mean = 0.5 * static_cast<double>(n0) * static_cast<double>(n1);

    std::map<double, int> tie_counts;
    for (double v : pooled) ++tie_counts[v];
    double tie_term = 0.0;
    for (const auto& [value, count] : tie_counts) {
        const double t = static_cast<double>(count);
        tie_term += t * t * t - t;
    }
    const double variance = (static_cast<double>(n0) * static_cast<double>(n1) / 12.0) *
                            ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(variance > 0.0)) return 1.0;

    const double corrected = std::max(0.0, std::abs(u - mean) - 0.5);
    const double z = corrected / std::sqrt(variance);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

} // namespace

DisparityResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                               double alpha, std::uint64_t mc_seed) {
    if (a.empty() || b.empty()) throw InputError("mann-whitney: empty sample");
    for (double v : a) {
        if (!std::isfinite(v)) throw InputError("mann-whitney: non-finite value");
    }
    for (double v : b) {
        if (!std::isfinite(v)) throw InputError("mann-whitney: non-finite value");
    }

    const int n0 = static_cast<int>(a.size());
    const int n1 = static_cast<int>(b.size());
    const int n = n0 + n1;

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> ranks = midranks(pooled);

    double observed_rank_sum = 0.0;
    for (int i = 0; i < n0; ++i) observed_rank_sum += ranks[static_cast<std::size_t>(i)];
    const double u_observed = u_from_rank_sum(observed_rank_sum, n0);

    DisparityResult result;
    result.u_statistic = u_observed;
    result.alpha = alpha;
    result.n0 = n0;
    result.n1 = n1;

    const long long total = combinations_capped(n, n0);
    if (total <= kExhaustiveLimit) {
        // Exhaustive enumeration of all C(n, n0) group-0 labelings.
        result.method = PValueMethod::kExact;
        long long count_le = 0, count_ge = 0;
        std::vector<int> combo(static_cast<std::size_t>(n0));
        std::iota(combo.begin(), combo.end(), 0);
        for (;;) {
            double rank_sum = 0.0;
            for (int idx : combo) rank_sum += ranks[static_cast<std::size_t>(idx)];
            const double u = u_from_rank_sum(rank_sum, n0);
            if (u <= u_observed + kStatTolerance) ++count_le;
            if (u >= u_observed - kStatTolerance) ++count_ge;

            // Next lexicographic combination.
            int slot = n0 - 1;
            while (slot >= 0 && combo[static_cast<std::size_t>(slot)] == n - n0 + slot) {
                --slot;
            }
            if (slot < 0) break;
            ++combo[static_cast<std::size_t>(slot)];
            for (int j = slot + 1; j < n0; ++j) {
                combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
            }
        }
        const double tail = static_cast<double>(std::min(count_le, count_ge)) /
                            static_cast<double>(total);
        result.p_value = std::min(1.0, 2.0 * tail);
    } else {
        // Seeded Monte-Carlo permutations, normal approximation alongside.
        result.method = PValueMethod::kNormalApprox;
        Rng rng(mix64({mc_seed, 0x6D776D63ULL})); // "mwmc" stream
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        long long count_le = 0, count_ge = 0;
        for (int perm = 0; perm < kMonteCarloPermutations; ++perm) {
            for (int j = 0; j < n0; ++j) {
                const int k = j + static_cast<int>(rng.uniform_int(
                                      static_cast<std::uint64_t>(n - j)));
                std::swap(order[static_cast<std::size_t>(j)],
                          order[static_cast<std::size_t>(k)]);
            }
            double rank_sum = 0.0;
            for (int j = 0; j < n0; ++j) {
                rank_sum += ranks[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
            }
            const double u = u_from_rank_sum(rank_sum, n0);
            if (u <= u_observed + kStatTolerance) ++count_le;
            if (u >= u_observed - kStatTolerance) ++count_ge;
        }
        const double tail =
            static_cast<double>(1 + std::min(count_le, count_ge)) /
            static_cast<double>(kMonteCarloPermutations + 1);
        result.p_value = std::min(1.0, 2.0 * tail);
        result.p_normal = normal_approx_p(u_observed, n0, n1, pooled);
    }

    result.significant = result.p_value < alpha;
    return result;
}

DisparityResult test_disparity(std::span<const double> group0_means,
                               std::span<const double> group1_means, double alpha,
                               int expected_trials) {
    if (static_cast<int>(group0_means.size()) != expected_trials ||
        static_cast<int>(group1_means.size()) != expected_trials) {
        throw ProtocolError("disparity test expects " + std::to_string(expected_trials) +
                            " per-trial means per group, got " +
                            std::to_string(group0_means.size()) + " and " +
                            std::to_string(group1_means.size()));
    }
    return mann_whitney_u(group0_means, group1_means, alpha);
}

} // namespace xaudit
