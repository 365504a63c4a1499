#include "xaudit/rng.hpp"

#include <cmath>
#include <numbers>

namespace xaudit {

std::uint64_t mix64(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t state = 0x58A7C3B1D2E9F405ULL; // fixed mixing key
    for (std::uint64_t part : parts) {
        state ^= part;
        splitmix64_next(state);
    }
    return splitmix64_next(state);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] so log() is finite.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t Rng::uniform_int(std::uint64_t bound) {
    // Lemire's multiply-shift with rejection on the biased strip.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next_u64();
        const unsigned __int128 product =
            static_cast<unsigned __int128>(r) * static_cast<unsigned __int128>(bound);
        if (static_cast<std::uint64_t>(product) >= threshold) {
            return static_cast<std::uint64_t>(product >> 64);
        }
    }
}

} // namespace xaudit
