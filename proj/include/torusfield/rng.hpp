#pragma once

#include <cmath>
#include <cstdint>

namespace torusfield {

// Counter-seeded xoshiro256++ stream with a Box-Muller normal source.
//
// Substreams are derived from (master seed, cell id, sample index) by a
// splitmix64 chain, so results are independent of how samples are scheduled
// across threads.  That is the whole determinism story: same seed, same
// outputs, any thread count.
class Rng {
  public:
    static std::uint64_t splitmix64(std::uint64_t& state) {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        has_cached_ = false;
    }

    // Substream for task `index` of stream `stream` under `master`.
    static Rng substream(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
        std::uint64_t sm = master;
        std::uint64_t a = splitmix64(sm);
        sm = a ^ (stream * 0x9e3779b97f4a7c15ull + 0x243f6a8885a308d3ull);
        std::uint64_t b = splitmix64(sm);
        sm = b ^ (index * 0xd1b54a32d192ed03ull + 0x452821e638d01377ull);
        return Rng(splitmix64(sm));
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

    // Uniform in (0,1]; never 0, so log() below is safe.
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (the cosine/sine pair is cached).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        cached_ = rad * std::sin(ang);
        has_cached_ = true;
        return rad * std::cos(ang);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_;
};

} // namespace torusfield
