#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace halting {

// SplitMix64 finalizer. Used to derive per-trial seeds from
// (experiment seed, trial index) so trial streams are independent of
// scheduling order.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// A deterministic random stream. All distribution transforms are done
// here from raw 64-bit draws so output is pinned for a given seed,
// independent of the standard library's distribution implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    static RandomStream for_trial(std::uint64_t experiment_seed,
                                  std::uint64_t trial_index) {
        return RandomStream(mix64(mix64(experiment_seed) ^ trial_index));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0,1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform strictly inside (0,1).
    double uniform01_open() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    // Uniform strictly inside (lo, hi).
    double uniform_open(double lo, double hi) {
        return lo + (hi - lo) * uniform01_open();
    }

    // Standard normal via Box-Muller; the spare is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01_open();
        const double u2 = uniform01_open();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // +1 or -1 with equal probability.
    double sign() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

    // Uniform integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace halting
