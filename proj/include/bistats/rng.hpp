#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace bistats::rng {

/// SplitMix64 step; used to derive independent substream seeds from one
/// master seed so parallel components reproduce serial runs.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for the `counter`-th substream of `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    std::uint64_t state = master ^ (counter * 0xda942042e4dd58b5ULL);
    return splitmix64(state);
}

/// Deterministic generator: the mt19937_64 engine is fully specified by the
/// standard; the distributions below are hand-rolled because the standard
/// library's are implementation-defined and would break byte-identical
/// reports across toolchains.
class Generator {
public:
    explicit Generator(std::uint64_t seed) : engine_(seed) {}

    /// Uniform integer in [0, bound), bias-free via rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform double in (0, 1).
    double uniform01() {
        // 53 random bits, shifted into (0,1) by a half-ulp offset.
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
    }

    /// Standard normal via Box-Muller (deterministic, no cached spare).
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Fisher-Yates shuffle of 0..n-1.
    std::vector<int> permutation(int n) {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) p[i] = i;
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(uniform_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(p[i], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace bistats::rng
