#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace fkpam {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hash-chains a base seed with substream indices. Replicas indexed by task
/// (path, lattice point, realization) get streams independent of worker
/// scheduling, which is what makes parallel runs byte-reproducible.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> words) {
    std::uint64_t s = seed ^ 0x6a09e667f3bcc908ULL;
    splitmix64(s);
    for (std::uint64_t w : words) {
        s ^= w + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        splitmix64(s);
    }
    return splitmix64(s);
}

/// xoshiro256++ stream seeded through splitmix64. Uniforms in [0,1) and
/// Box-Muller normals; no hidden state beyond the four words, so a stream is
/// fully determined by its seed.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s);
    }

    std::uint64_t next_u64() {
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

    /// Uniform in [0,1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (cosine branch, two uniforms per draw).
    double next_normal() {
        double u1 = next_double();
        double u2 = next_double();
        // u1 == 0 would give log(0); shift into (0,1].
        u1 = 1.0 - u1;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace fkpam
