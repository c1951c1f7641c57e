#pragma once

#include <cmath>
#include <cstdint>

namespace quorum {

// splitmix64: tiny, fast, splittable. One instance per logical stream keeps
// simulation output independent of event interleaving, so a refactor of the
// event loop cannot silently change the draws a job sees.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1): 53-bit mantissa, offset half an ulp so log() never
    // sees zero.
    double uniform01() {
        return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::uint64_t state_;
};

// Deterministic sub-seed for a (tag, index) stream of a master seed.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t tag,
                                        std::uint64_t index) {
    SplitMix64 mix(seed ^ (tag * 0xD6E8FEB86659FD93ull));
    mix.next();
    SplitMix64 mix2(mix.next() ^ (index * 0xA5A5A5A5A5A5A5A5ull));
    mix2.next();
    return mix2.next();
}

}  // namespace quorum
