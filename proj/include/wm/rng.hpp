#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace wm {

// All randomness in the toolkit flows through the two generators below so
// that outputs are reproducible across runs and platforms. Standard-library
// distributions are avoided on purpose (their algorithms are
// implementation-defined).

/// SplitMix64 (Steele, Lea, Flood 2014). Used for seeding and hashing.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

/// xoshiro256** 1.0 (Blackman, Vigna), seeded via SplitMix64.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm.next();
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n), n > 0. Simple rejection-free mapping; n is tiny here.
    uint64_t below(uint64_t n) { return next_u64() % n; }

    bool coin() { return (next_u64() >> 63) != 0; }

    /// Standard normal via Box-Muller (documented, portable algorithm).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Poisson draw: Knuth for small means, normal approximation above 60.
    uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 60.0) {
            double draw = mean + std::sqrt(mean) * normal();
            return draw < 0.5 ? 0 : static_cast<uint64_t>(draw + 0.5);
        }
        const double limit = std::exp(-mean);
        uint64_t count = 0;
        double product = uniform();
        while (product > limit) {
            ++count;
            product *= uniform();
        }
        return count;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a 64-bit over bytes; used to mix strings into seeds.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL) {
    uint64_t hash = seed;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

/// Deterministic seed mixing for per-item substreams.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    SplitMix64 sm(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    return sm.next();
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) { return mix_seed(mix_seed(a, b), c); }

} // namespace wm
