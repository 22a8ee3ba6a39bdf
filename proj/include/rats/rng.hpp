#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace rats {

// Deterministic RNG used by every stochastic component. The raw mt19937_64
// stream is standard-specified, and uniform/normal draws are derived from it
// without any library distribution state, so sequences are reproducible
// across platforms and library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller. No cached second value: each call
    // consumes exactly two uniforms, keeping streams easy to reason about.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double two_pi = 2.0 * M_PI;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo is biased for huge n; all uses here have
        // n << 2^32 where the bias is negligible, but do it right anyway.
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Child stream keyed on (current state, label, index). Advances the
    // parent by one draw; two forks with the same key from the same parent
    // state coincide, forks in sequence do not.
    Rng fork(std::string_view label, std::uint64_t index = 0) {
        std::uint64_t h = mix(next_u64() ^ 0x9e3779b97f4a7c15ULL);
        for (const char c : label) h = mix(h ^ static_cast<std::uint64_t>(c));
        h = mix(h ^ index);
        return Rng(h);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

// Stream derivation for the harness: (master seed, consumer label, round)
// maps to an independent seed without touching any parent stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t round = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(master);
    for (const char c : label) h = mix(h ^ static_cast<std::uint64_t>(c));
    return mix(h ^ round);
}

}  // namespace rats
