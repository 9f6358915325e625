#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace qnet {

/// splitmix64 mixing step. Used to derive well-separated stream seeds
/// from a master seed plus arbitrary tags.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the substream identified by (a, b, c) under a master seed.
/// Distinct tags give statistically independent streams, so changing one
/// node's parameters never perturbs another node's sample path.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix64(master);
    s = mix64(s ^ mix64(a + 0x100));
    s = mix64(s ^ mix64(b + 0x200));
    s = mix64(s ^ mix64(c + 0x300));
    return s;
}

/// Deterministic random stream. All variate generation is done by inverse
/// transform on explicitly constructed 53-bit uniforms, never through
/// std::*_distribution, so identical seeds give identical sample paths on
/// every platform and standard library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(mix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform01_open() { return 1.0 - uniform01(); }

    /// Exponential variate with the given rate (mean 1/rate).
    double exponential(double rate) {
        return -std::log(uniform01_open()) / rate;
    }

    /// Uniform integer in [lo, hi], inclusive, unbiased.
    long long uniform_int(long long lo, long long hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        // Lemire's multiply-shift with rejection of the biased zone.
        std::uint64_t x = gen_();
        __uint128_t m = static_cast<__uint128_t>(x) * range;
        auto low = static_cast<std::uint64_t>(m);
        if (low < range) {
            const std::uint64_t threshold = (-range) % range;
            while (low < threshold) {
                x = gen_();
                m = static_cast<__uint128_t>(x) * range;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return lo + static_cast<long long>(m >> 64);
    }

    /// Geometric variate on {1, 2, ...} with success probability p.
    long long geometric(double p) {
        if (p >= 1.0) return 1;
        const double u = uniform01_open();
        return 1 + static_cast<long long>(std::floor(std::log(u) / std::log1p(-p)));
    }

    /// Standard normal via Box-Muller (no state carried between calls).
    double normal() {
        const double u1 = uniform01_open();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace qnet
