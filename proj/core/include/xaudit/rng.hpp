#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace xaudit {

// SplitMix64 increment (golden-ratio constant). Every seed derivation in the
// audit goes through mix64() below, so all published numbers are reproducible
// from the trial seed alone.
inline constexpr std::uint64_t kSeedGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += kSeedGamma;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// The fixed 64-bit mixing function: fold each part into a SplitMix64 state,
// stepping once per part, and return one further output step.
//
//   mix64({a})       != a                 (always hashed, never identity)
//   mix64({a, b})    != mix64({b, a})     (order-sensitive)
std::uint64_t mix64(std::initializer_list<std::uint64_t> parts);

// Deterministic, portable pseudo-random stream. The generator is a plain
// SplitMix64 sequence; normals come from a Box-Muller pair cache. The exact
// bit stream is part of the reproducibility contract, so no standard-library
// distribution objects are used (their output is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; pairs are cached.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, bound), bound >= 1. Unbiased (Lemire rejection).
    std::uint64_t uniform_int(std::uint64_t bound);

    // Fisher-Yates shuffle, high-to-low index order.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace xaudit
