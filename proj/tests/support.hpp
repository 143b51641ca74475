#pragma once

#include <cmath>
#include <vector>

#include "doctest.h"
#include "shortcut_gd/geometry.hpp"

namespace test_support {

inline void check_close(const shortcut_gd::Vector& got, const std::vector<double>& want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        INFO("component " << i << ": got " << got[i] << ", want " << want[i]);
        CHECK(std::abs(got[i] - want[i]) <= tol);
    }
}

/// p = 2, k = 3 teacher with v* = (0.6, 0.8), a* = (1, -0.5, 2).
inline shortcut_gd::TeacherSpec small_teacher() {
    return shortcut_gd::TeacherSpec::create({0.6, 0.8}, {1.0, -0.5, 2.0});
}

/// Unit filter (cos th, sin th) as a state of the p = 2 student.
inline shortcut_gd::StudentState state_at_angle(double th, shortcut_gd::Vector a) {
    const double c = 1.0 / std::sqrt(2.0);
    return {{std::cos(th) - c, std::sin(th) - c}, std::move(a)};
}

}  // namespace test_support
