#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace climex {

// The generator stack is pinned so that experiment streams are reproducible
// bit-exactly across platforms and reimplementations:
//   * seeding / stream splitting: splitmix64 (Steele et al.), increment
//     0x9E3779B97F4A7C15, mix constants 0xBF58476D1CE4E5B9 and
//     0x94D049BB133111EB, final shift 31.
//   * stream generation: xoshiro256++ (Blackman & Vigna), rotl(s0+s3,23)+s0
//     output, state update with shift 17 and rotations 45.
//   * normal variates: Box-Muller using both outputs, never ziggurat.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from a base seed and up to three lane
/// indices. Stable contract: seed(base, a, b, c) feeds base, a, b, c through a
/// splitmix64 chain in that order, so curves are invariant under the degree of
/// parallelization used to compute them.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = base;
    std::uint64_t out = splitmix64_next(s);
    s = out ^ a;
    out = splitmix64_next(s);
    s = out ^ b;
    out = splitmix64_next(s);
    s = out ^ c;
    return splitmix64_next(s);
}

class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ull; }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in (0, 1]: 53 high bits, offset by one ulp so log() is safe.
    double uniform01() {
        return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_{};
};

/// Deterministic stream of standard normal variates. Single-owner and
/// stateful; workers derive independent streams via derive_seed.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.uniform01();
        const double u2 = rng_.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    /// Uniform bit, consumed from the underlying generator (does not disturb
    /// the Box-Muller spare).
    bool next_bit() { return (rng_() >> 63) != 0; }

    double next_uniform01() { return rng_.uniform01(); }

    std::uint64_t next_u64() { return rng_(); }

private:
    Xoshiro256pp rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace climex
