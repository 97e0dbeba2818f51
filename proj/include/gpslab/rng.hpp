#pragma once

#include <cmath>
#include <cstdint>

namespace gpslab {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so sharded sampling is reproducible
/// independent of thread scheduling.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() { return mix(seed_, stream_, counter_++); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (no state caching).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) {
        // splitmix64 finalizer over a combined key
        std::uint64_t z = seed;
        z += 0x9e3779b97f4a7c15ull * (stream + 1);
        z += 0xbf58476d1ce4e5b9ull * (counter + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace gpslab
