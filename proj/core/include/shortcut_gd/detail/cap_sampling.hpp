#pragma once

#include <cmath>
#include <random>

#include "shortcut_gd/geometry.hpp"
#include "shortcut_gd/random.hpp"

namespace shortcut_gd {

// The polar angle of a uniform point on S^{p-1} has density proportional to
// sin^{p-2}(theta); draw it by rejection from uniform theta, then pick a
// uniform direction orthogonal to the center.
template <class Rng>
Vector random_in_cap(Rng& rng, ConstView center, double max_angle) {
    const std::size_t p = center.size();
    const auto c = normalized(center);
    max_angle = std::clamp(max_angle, 0.0, kPi);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (p == 1) {
        if (max_angle >= kPi && unif(rng) < 0.5) return scaled(c, -1.0);
        return c;
    }

    const double sin_max = std::sin(std::min(max_angle, kPi / 2.0));
    double theta = 0.0;
    for (;;) {
        theta = max_angle * unif(rng);
        if (p == 2 || sin_max == 0.0) break;
        const double ratio = std::sin(theta) / sin_max;
        if (unif(rng) <= std::pow(ratio, static_cast<double>(p - 2))) break;
    }

    Vector u;
    double n = 0.0;
    do {
        u = random_unit_vector(rng, p);
        const double along = dot(u, c);
        for (std::size_t i = 0; i < p; ++i) u[i] -= along * c[i];
        n = norm(u);
    } while (n < 1e-8);

    Vector out(p);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    for (std::size_t i = 0; i < p; ++i) out[i] = ct * c[i] + st * u[i] / n;
    return normalized(out);
}

}  // namespace shortcut_gd
