#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace flagcast {

// Deterministic 64-bit generator (splitmix64). Chosen over std::mt19937_64 so
// streams can be derived cheaply per (entity, purpose) pair and results stay
// identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). Rejection keeps the distribution exact.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    std::int64_t next_in(std::int64_t lo, std::int64_t hi) {  // inclusive bounds
        return lo + static_cast<std::int64_t>(
                        next_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool next_bernoulli(double p) { return next_double() < p; }

    // Knuth's product method, split into chunks so exp(-lambda) never
    // underflows. Exact in distribution for any nonnegative lambda.
    std::int64_t next_poisson(double lambda) {
        std::int64_t total = 0;
        while (lambda > 30.0) {
            total += poisson_knuth(30.0);
            lambda -= 30.0;
        }
        if (lambda > 0.0) total += poisson_knuth(lambda);
        return total;
    }

private:
    std::int64_t poisson_knuth(double lambda) {
        const double limit = std::exp(-lambda);
        std::int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_double();
        } while (p > limit);
        return k - 1;
    }

    std::uint64_t state_;
};

// FNV-1a over the tag, then one splitmix64 mixing step against the base.
// Distinct tags give statistically independent streams from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    Rng mixer(base ^ h);
    return mixer.next_u64();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    Rng mixer(base ^ (salt * 0x9e3779b97f4a7c15ULL));
    return mixer.next_u64();
}

}  // namespace flagcast
