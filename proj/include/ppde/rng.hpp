#pragma once

#include <cstdint>
#include <random>

namespace ppde {

// splitmix64 mixing step; used to derive independent substream seeds from
// (base seed, stream tag, path index) so simulation output does not depend
// on worker count or evaluation order.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    splitmix64(s);
    s ^= b + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
    splitmix64(s);
    return s;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

// xoshiro256++ by Blackman and Vigna. Chosen over mt19937_64 for the Monte
// Carlo substreams: construction is a few ns (mt19937_64 needs ~0.6 us, which
// dominates when every continuation path gets its own stream).
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed) {
        for (auto& w : s_) w = splitmix64(seed);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
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

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Stream tags keep substreams for different purposes disjoint even when the
// same base seed is reused across commands.
enum class StreamTag : std::uint64_t {
    simulation = 1,
    initial_values = 2,
    beta = 3,
    mc_continuation = 4,
    net_init = 5,
    test_batch = 6,
};

inline Xoshiro256pp path_rng(std::uint64_t seed, StreamTag tag, std::uint64_t path_index) {
    return Xoshiro256pp(mix_seed(seed, static_cast<std::uint64_t>(tag), path_index));
}

} // namespace ppde
