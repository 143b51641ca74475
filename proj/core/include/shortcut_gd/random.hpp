#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include "shortcut_gd/vec.hpp"

namespace shortcut_gd {

/// SplitMix64 (Steele, Lea, Flood 2014) used as a counter-keyed stream: the
/// stream for (seed, index) starts from a state derived by hashing both, so a
/// sample's randomness depends only on its index and never on which worker
/// drew it. Satisfies UniformRandomBitGenerator; normal variates come from
/// std::normal_distribution on top of it.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t index = 0)
        : state_(mix(seed ^ mix(index + 0x9E3779B97F4A7C15ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Uniformly distributed direction on the unit sphere in R^dim.
template <class Rng>
Vector random_unit_vector(Rng& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    double n = 0.0;
    do {
        for (auto& x : v) x = normal(rng);
        n = norm(v);
    } while (n == 0.0);
    for (auto& x : v) x /= n;
    return v;
}

/// Uniform point in the Euclidean ball of the given radius: direction times
/// radius * U^(1/dim).
template <class Rng>
Vector random_in_ball(Rng& rng, std::size_t dim, double radius) {
    auto v = random_unit_vector(rng, dim);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
    for (auto& x : v) x *= r;
    return v;
}

}  // namespace shortcut_gd
