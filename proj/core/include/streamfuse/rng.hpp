#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace streamfuse {

// Deterministic random source shared by the synthetic generator and the
// active-learning threshold randomizer. std::mt19937_64 is fully specified
// by the standard; the float conversions below are done by hand because
// std::uniform_real_distribution / std::normal_distribution are allowed to
// differ between standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (polar-free, two uniforms per pair).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Avoid log(0); smallest u1 is then 2^-53.
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo is fine here; n is tiny (blob counts, class
        // counts) compared to 2^64 so the bias is unobservable.
        return engine_() % n;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace streamfuse
