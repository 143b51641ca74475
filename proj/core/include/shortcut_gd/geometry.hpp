#pragma once

#include <numbers>

#include "shortcut_gd/vec.hpp"

namespace shortcut_gd {

inline constexpr double kPi = std::numbers::pi;

/// Tolerance used when validating that a teacher filter has unit norm.
inline constexpr double kTeacherUnitTol = 1e-12;
/// Tolerance for the student manifold constraint ||1/sqrt(p) + w|| = 1.
inline constexpr double kManifoldTol = 1e-9;
/// Below this norm a direction is considered degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

/// True parameters of the teacher network g(v*, a*, Z) = sum_j a*_j relu(Z_j^T v*),
/// together with the quantities the convergence analysis derives from them.
class TeacherSpec {
public:
    /// Validates ||v_star|| = 1 and a positive overlap with the shortcut
    /// direction (equivalently ||w_star|| < sqrt(2)); throws PreconditionError.
    static TeacherSpec create(Vector v_star, Vector a_star);

    std::size_t p() const { return v_star_.size(); }
    std::size_t k() const { return a_star_.size(); }
    const Vector& v_star() const { return v_star_; }
    const Vector& a_star() const { return a_star_; }
    /// v_star - 1/sqrt(p).
    const Vector& w_star() const { return w_star_; }
    /// 1^T a_star.
    double sum_a() const { return sum_a_; }
    double a_norm_sq() const { return a_norm_sq_; }
    /// Lower end of the basin band for a^T a*: ||a*||^2 / 5.
    double m() const { return m_; }
    /// Upper end of the basin band: 3||a*||^2 + 2(1^T a*)^2.
    double M() const { return M_; }
    /// ||w_star|| <= 1, the strict shortcut prior.
    bool strict_prior() const { return strict_prior_; }

private:
    TeacherSpec() = default;

    Vector v_star_;
    Vector a_star_;
    Vector w_star_;
    double sum_a_ = 0.0;
    double a_norm_sq_ = 0.0;
    double m_ = 0.0;
    double M_ = 0.0;
    bool strict_prior_ = false;
};

/// Student iterate (w, a). The filter actually applied is 1/sqrt(p) + w,
/// which is kept on the unit sphere.
struct StudentState {
    Vector w;
    Vector a;

    /// 1/sqrt(p) + w.
    Vector filter() const;
    bool on_manifold(double tol = kManifoldTol) const;
};

/// Angle between unit vectors via 2 atan2(|u - v|, |u + v|); accurate near 0 and pi.
double unit_angle(ConstView u, ConstView v);

/// pi - g(phi), evaluated without cancellation near phi = 0.
double pi_minus_g(double phi);

/// Offset w with base + w == target in floating point when one exists
/// (nearest candidates to target - base), otherwise target - base.
double exact_offset(double base, double target);

/// g(phi) = (pi - phi) cos(phi) + sin(phi) on [0, pi]; throws DomainError outside.
double g_phi(double phi);

/// Angle in [0, pi]; the cosine is clipped to [-1, 1] before arccos.
double angle_between(ConstView u, ConstView v);

/// The vector 1/sqrt(p) in R^p.
Vector shortcut_direction(std::size_t p);

/// (1/sqrt(p) + w_tilde) / ||1/sqrt(p) + w_tilde|| - 1/sqrt(p).
/// Throws DegenerateDirectionError when the shifted vector has norm below 1e-12.
Vector renormalize_shortcut(ConstView w_tilde);

/// Normalizes v onto the unit sphere; throws DegenerateDirectionError on ~0 input.
Vector normalized(ConstView v);

}  // namespace shortcut_gd
