#pragma once

// Seeded randomness. The generator is std::mt19937_64 (its output stream is
// pinned by the C++ standard), and the uniform/normal transforms below are
// spelled out explicitly instead of going through std::*_distribution, whose
// algorithms vary between standard libraries. A given seed therefore
// reproduces the same sample stream wherever the same libm rounds alike.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace gws {

struct Seed {
    std::uint64_t value = 0;
};

// SplitMix64 finalizer; used to derive per-trial child seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Documented splitting rule: child k of seed s is mix(s XOR mix(k+1)).
inline Seed derive_seed(Seed parent, std::uint64_t index) {
    return Seed{mix_seed(parent.value ^ mix_seed(index + 1))};
}

class Rng {
public:
    explicit Rng(Seed seed) : engine_(seed.value) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // index in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::domain_error("Rng::uniform_index: empty range");
        // rejection sampling keeps the draw unbiased
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Marsaglia polar; one cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gws
