#pragma once

#include <cstdint>

namespace fbac {

/**
 * Counter-based random stream: value k of stream (seed) is
 * splitmix64(seed + (k+1) * 0x9E3779B97F4A7C15).
 *
 * Random access by counter, no hidden state, identical output on every
 * platform. All randomness in the toolkit flows from one experiment seed
 * through substreams derived with derive().
 */
struct Rng {
    std::uint64_t seed = 0;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t bits(std::uint64_t counter) const {
        return mix(seed + (counter + 1) * 0x9E3779B97F4A7C15ull);
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double u01(std::uint64_t counter) const {
        return double(bits(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [a, b).
    double uniform(std::uint64_t counter, double a, double b) const {
        return a + (b - a) * u01(counter);
    }

    /// Independent substream: distinct labels give decorrelated seeds.
    Rng derive(std::uint64_t label) const { return Rng{mix(seed ^ mix(label))}; }
};

} // namespace fbac
