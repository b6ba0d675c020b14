#pragma once

#include <cstdint>
#include <cmath>

namespace cpsim {

// splitmix64 step; also used as the mixing function for stream keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic key derivation: absorb components one at a time.
// Keys depend only on the listed components, never on window bounds,
// so streams are invariant under window enlargement.
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t tag,
                             std::int64_t a = 0, std::int64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= tag + 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= static_cast<std::uint64_t>(a) * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL;
    h ^= splitmix64(s);
    s ^= static_cast<std::uint64_t>(b) * 0xc4ceb9fe1a85ec53ULL + 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    return h;
}

// Seed for replica i of an experiment run under a master seed. Replica
// streams depend only on (master, i), giving the prefix property across
// different replica counts.
inline std::uint64_t replica_key(std::uint64_t master, std::uint64_t i) {
    return mix_key(master, 0x5EEDULL, static_cast<std::int64_t>(i));
}

// xoshiro256++ seeded from a 64-bit key via splitmix64.
class StreamRng {
public:
    explicit StreamRng(std::uint64_t key) {
        for (auto& w : s_) w = splitmix64(key);
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

    // uniform in the open interval (0, 1)
    double open01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // strictly positive exponential variate
    double exponential(double rate) {
        return -std::log(open01()) / rate;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace cpsim
