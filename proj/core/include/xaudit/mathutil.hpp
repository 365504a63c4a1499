#pragma once

#include <algorithm>
#include <cmath>

namespace xaudit {

// Smallest/largest probability a model may report. Keeps predicted
// probabilities in the open interval (0,1) for arbitrarily large inputs.
inline constexpr double kProbEpsilon = 1e-15;

inline double clamp_prob(double p) {
    return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

// Numerically stable logistic function.
inline double logistic(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return clamp_prob(1.0 / (1.0 + e));
    }
    const double e = std::exp(z);
    return clamp_prob(e / (1.0 + e));
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

} // namespace xaudit
