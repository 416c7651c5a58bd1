#pragma once

#include <cstdint>

namespace structlim {

/// SplitMix64. Every sampling site derives one stream per sample index, so
/// results depend only on (seed, index) and never on thread scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        // Decorrelate the index before mixing it into the seed.
        std::uint64_t z = (index + 0x9e3779b97f4a7c15ULL) * 0xbf58476d1ce4e5b9ULL;
        return Rng(mix(seed ^ mix(z)));
    }

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Unbiased value in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        // Rejection sampling over the top of the 64-bit range.
        std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace structlim
