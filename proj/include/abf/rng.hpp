#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "abf/torus.hpp"

namespace abf {

/// Counter-based generator: every variate is a pure function of
/// (seed, stream, counter), so replicas and trials are reproducible and
/// independent by stream index with no shared state.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

    /// Uniform double in (0, 1].
    double uniform(std::uint64_t counter) const {
        const std::uint64_t x = mix(key_ + 0x9e3779b97f4a7c15ULL * (counter + 1));
        return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal (Box-Muller, cosine branch); consumes counters 2c, 2c+1.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    /// One normal per coordinate in fixed order: counter = step*dim + i.
    void normal_vec(std::uint64_t step, std::span<double> out) const {
        const std::uint64_t d = out.size();
        for (std::uint64_t i = 0; i < d; ++i) out[i] = normal(step * d + i);
    }

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
};

}  // namespace abf
