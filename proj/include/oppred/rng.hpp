#pragma once

#include <cstdint>

namespace oppred {

// splitmix64: tiny, well-distributed, and trivially seedable. Every random
// decision in the toolkit flows through this so that (config, seed) pins
// every output byte.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Value-semantic generator: copies fork the stream deterministically.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next() { return splitmix64(state_); }

    // Uniform in [0, bound), bound > 0. Modulo bias is irrelevant at our
    // bound sizes (all << 2^32).
    uint64_t below(uint64_t bound) { return next() % bound; }

    uint64_t range(uint64_t lo, uint64_t hi) { return lo + below(hi - lo + 1); }

    bool chance(uint32_t percent) { return below(100) < percent; }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Independent child stream; used to give parallel work items the same
    // randomness they would see in a serial run.
    Rng fork(uint64_t salt) const {
        uint64_t s = state_ ^ (0x632be59bd9b4e019ULL * (salt + 1));
        return Rng(splitmix64(s));
    }

private:
    uint64_t state_;
};

} // namespace oppred
