#pragma once

#include <cstdint>

namespace ptc {

// Deterministic 64-bit generator (splitmix64). All experiment randomness
// flows from one root seed through named substreams so runs replay
// bit-exactly across platforms; std:: distributions are avoided on purpose.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

    // Independent substream identified by a tag.
    SplitMix64 split(std::uint64_t tag) {
        SplitMix64 mix(state_ ^ (0x6a09e667f3bcc909ULL + tag));
        return SplitMix64(mix.next());
    }

private:
    std::uint64_t state_;
};

} // namespace ptc
