#pragma once

#include <cstdint>

namespace dyad {

/// splitmix64: tiny deterministic generator. Results are identical across
/// platforms, which keeps seeded reports byte-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    /// Independent substream; used to make per-trial results order-free.
    Rng fork(std::uint64_t salt) {
        return Rng(state_ ^ (0xA0761D6478BD642Full * (salt + 1)));
    }

private:
    std::uint64_t state_;
};

}  // namespace dyad
