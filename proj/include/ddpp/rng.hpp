#pragma once

#include <cstdint>

namespace ddpp {

// SplitMix64 stream, used only to seed and derive other generators.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

// xoshiro256++ by Blackman and Vigna. Fast, small state, good statistical
// quality; every generator in the project goes through this class so that
// results are reproducible across platforms and standard-library versions.
class Rng {
  public:
    Rng() : Rng(0) {}

    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    // Independent child stream. Streams for distinct (seed, index) pairs are
    // decorrelated by the SplitMix64 scrambling of both inputs.
    static Rng child(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 sm(seed);
        std::uint64_t mixed = sm.next() ^ SplitMix64(index + 0x632be59bd9b4e019ULL).next();
        return Rng(mixed);
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

    // Uniform double in [0, 1) built from the top 53 bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound). Lemire's multiply-shift with rejection,
    // so the distribution is exact for any bound.
    std::uint32_t next_below(std::uint32_t bound) {
        std::uint64_t x = next_u64() >> 32;
        std::uint64_t m = x * bound;
        std::uint32_t l = static_cast<std::uint32_t>(m);
        if (l < bound) {
            std::uint32_t t = (0u - bound) % bound;
            while (l < t) {
                x = next_u64() >> 32;
                m = x * bound;
                l = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    // Single fair bit (top bit of the next word).
    int next_bit() { return static_cast<int>(next_u64() >> 63); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

}  // namespace ddpp
