#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace rckit {

// Deterministic, platform-independent RNG with cheap substream derivation.
// Every consumer builds its own Rng from (seed, stream labels), so results
// never depend on thread scheduling or on how many draws other parts of the
// pipeline consume.
//
// Engine: xoshiro256++ seeded through splitmix64 (Blackman & Vigna).
class Rng {
public:
    explicit Rng(std::uint64_t seed) { init(seed); }

    // Substream: hash the labels into the seed. Rng(s, {a,b}) and
    // Rng(s, {a,c}) are decorrelated streams for b != c.
    Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
        std::uint64_t key = seed;
        for (std::uint64_t label : stream)
            key = mix64(key ^ mix64(label + 0x9e3779b97f4a7c15ULL));
        init(key);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on (0,1); never returns 0 or 1, so log()/quantile transforms
    // stay finite.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller. One draw consumes two uniforms; no
    // cached state, so the stream position is a pure function of the number
    // of calls.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n). Lemire's multiply-shift with rejection,
    // bias-free.
    std::uint64_t uniform_int(std::uint64_t n) {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    // splitmix64 finalizer
    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    void init(std::uint64_t seed) {
        std::uint64_t z = seed;
        for (auto& w : s_) {
            z += 0x9e3779b97f4a7c15ULL;
            std::uint64_t t = z;
            t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
            t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
            w = t ^ (t >> 31);
        }
    }

    std::uint64_t s_[4];
};

// Fixed labels for module substreams, so independent pipeline stages never
// share a stream even under one top-level seed.
namespace stream {
inline constexpr std::uint64_t simulation = 0x51u;
inline constexpr std::uint64_t bootstrap = 0xB0u;
inline constexpr std::uint64_t survey_weights = 0x5Eu;
inline constexpr std::uint64_t imputation = 0x31u;
} // namespace stream

} // namespace rckit
