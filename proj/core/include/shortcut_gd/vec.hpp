#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace shortcut_gd {

// Dense real vector. Dimensions here are small (p <= 8, k <= 100), so a plain
// std::vector with a handful of kernels beats pulling in a tensor library.
using Vector = std::vector<double>;
using ConstView = std::span<const double>;

inline double dot(ConstView x, ConstView y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double sum(ConstView x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
}

inline double norm_sq(ConstView x) { return dot(x, x); }
inline double norm(ConstView x) { return std::sqrt(norm_sq(x)); }

inline double dist_sq(ConstView x, ConstView y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

inline Vector add(ConstView x, ConstView y) {
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return out;
}

inline Vector sub(ConstView x, ConstView y) {
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
    return out;
}

inline Vector scaled(ConstView x, double c) {
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
    return out;
}

inline double max_abs(ConstView x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace shortcut_gd
