#include "shortcut_gd/geometry.hpp"

#include <cmath>
#include <sstream>

#include "shortcut_gd/errors.hpp"

namespace shortcut_gd {

double exact_offset(double base, double target) {
    const double w = target - base;
    double lo = w;
    double hi = w;
    for (int step = 0; step < 4; ++step) {
        if (base + lo == target) return lo;
        if (base + hi == target) return hi;
        lo = std::nextafter(lo, -HUGE_VAL);
        hi = std::nextafter(hi, HUGE_VAL);
    }
    return w;
}

TeacherSpec TeacherSpec::create(Vector v_star, Vector a_star) {
    if (v_star.empty()) throw PreconditionError("teacher: p must be positive");
    if (a_star.empty()) throw PreconditionError("teacher: k must be positive");
    const double vn = norm(v_star);
    if (std::abs(vn - 1.0) > kTeacherUnitTol) {
        std::ostringstream msg;
        msg << "teacher: ||v*|| = " << vn << " is not 1";
        throw PreconditionError(msg.str());
    }
    const auto shortcut = shortcut_direction(v_star.size());
    if (dot(shortcut, v_star) <= 0.0) {
        throw PreconditionError("teacher: v* must have positive overlap with 1/sqrt(p)");
    }

    TeacherSpec t;
    t.w_star_ = sub(v_star, shortcut);
    for (std::size_t i = 0; i < t.w_star_.size(); ++i) t.w_star_[i] = exact_offset(shortcut[i], v_star[i]);
    t.v_star_ = std::move(v_star);
    t.a_star_ = std::move(a_star);
    t.sum_a_ = sum(t.a_star_);
    t.a_norm_sq_ = norm_sq(t.a_star_);
    t.m_ = t.a_norm_sq_ / 5.0;
    t.M_ = 3.0 * t.a_norm_sq_ + 2.0 * t.sum_a_ * t.sum_a_;
    t.strict_prior_ = norm(t.w_star_) <= 1.0;
    return t;
}

Vector StudentState::filter() const {
    Vector v(w.size());
    const double c = 1.0 / std::sqrt(static_cast<double>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = c + w[i];
    return v;
}

bool StudentState::on_manifold(double tol) const {
    return !w.empty() && std::abs(norm(filter()) - 1.0) <= tol;
}

double pi_minus_g(double phi) {
    if (!(phi >= 0.0 && phi <= kPi)) throw DomainError("pi_minus_g: phi must lie in [0, pi]");
    const double h = std::sin(0.5 * phi);
    return 2.0 * kPi * h * h + (phi * std::cos(phi) - std::sin(phi));
}

double g_phi(double phi) {
    if (!(phi >= 0.0 && phi <= kPi)) throw DomainError("g_phi: phi must lie in [0, pi]");
    return (kPi - phi) * std::cos(phi) + std::sin(phi);
}

double unit_angle(ConstView u, ConstView v) {
    double diff = 0.0;
    double plus = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        diff += (u[i] - v[i]) * (u[i] - v[i]);
        plus += (u[i] + v[i]) * (u[i] + v[i]);
    }
    return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(plus));
}

double angle_between(ConstView u, ConstView v) {
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu == 0.0 || nv == 0.0) throw DomainError("angle_between: zero-norm input");
    double diff = 0.0;
    double plus = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u[i] / nu;
        const double y = v[i] / nv;
        diff += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(plus));
}

Vector shortcut_direction(std::size_t p) {
    if (p == 0) throw DomainError("shortcut_direction: p must be positive");
    return Vector(p, 1.0 / std::sqrt(static_cast<double>(p)));
}

Vector normalized(ConstView v) {
    const double n = norm(v);
    if (!(n >= kDegenerateNorm)) throw DegenerateDirectionError("cannot normalize a (near) zero vector");
    return scaled(v, 1.0 / n);
}

Vector renormalize_shortcut(ConstView w_tilde) {
    const auto shortcut = shortcut_direction(w_tilde.size());
    const auto v = add(shortcut, w_tilde);
    const double n = norm(v);
    if (!(n >= kDegenerateNorm)) {
        throw DegenerateDirectionError("renormalize_shortcut: 1/sqrt(p) + w has no direction");
    }
    Vector w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = v[i] / n - shortcut[i];
    return w;
}

}  // namespace shortcut_gd
