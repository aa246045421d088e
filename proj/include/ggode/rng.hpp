#pragma once

#include <cmath>
#include <cstdint>

namespace ggode {

// Counter-based deterministic RNG (splitmix64 core). The same seed
// always reproduces the same stream, and independent streams can be
// derived for parallel work without sharing mutable state.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(seed_ + counter_ * 0x9E3779B97F4A7C15ull);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny compared to 2^64.
        return next_u64() % n;
    }

    // Standard normal via Box-Muller; the spare value is cached so the
    // draw count stays deterministic.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent stream derived from this RNG's seed and the given keys.
    Rng derive(std::uint64_t a, std::uint64_t b = 0x7fb5d329728ea185ull,
               std::uint64_t c = 0x8ebc6af09c88c6e3ull) const {
        std::uint64_t s = mix(seed_ ^ mix(a + 0x9E3779B97F4A7C15ull));
        s = mix(s ^ mix(b));
        s = mix(s ^ mix(c));
        return Rng(s);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ggode
