#pragma once

#include <span>
#include <string>
#include <variant>

#include "shortcut_gd/geometry.hpp"

namespace shortcut_gd {

// Closed-form population loss 1/2 E_Z[g(v*,a*,Z) - f(w,a,Z)]^2 for Gaussian
// patches and its gradients. Every formula depends on the student only through
// the unit filter v = 1/sqrt(p) + w and the output weights a, with
// phi = angle(v, v*).

/// Quantities shared by the loss and both gradients at one point.
struct LandscapeTerms {
    double phi = 0.0;
    double g = 0.0;           // g(phi)
    double cos_phi = 0.0;     // v^T v*
    double a_dot_astar = 0.0; // a^T a*
    double sum_a = 0.0;       // 1^T a
};

LandscapeTerms landscape_terms(ConstView v, ConstView a, const TeacherSpec& teacher);

/// Loss for a unit filter v (no manifold check).
double loss_at_filter(ConstView v, ConstView a, const TeacherSpec& teacher);

/// Writes grad_v and grad_a for a unit filter v into the output spans and
/// returns the shared terms. No allocation; used by the optimizer hot loop.
LandscapeTerms gradients_at_filter(ConstView v, ConstView a, const TeacherSpec& teacher,
                                   std::span<double> grad_v, std::span<double> grad_a);

/// Throws PreconditionError when the state is off the manifold or has the wrong shape.
void require_on_manifold(const StudentState& state, const TeacherSpec& teacher);

double population_loss(const StudentState& state, const TeacherSpec& teacher);

/// (1/2pi)(11^T + (pi-1)I) a - (1/2pi)(11^T + (g(phi)-1)I) a*.
Vector grad_a(const StudentState& state, const TeacherSpec& teacher);

/// -(a^T a* (pi - phi) / 2pi) (I - v v^T) v*; tangent to the unit sphere at v.
Vector grad_w(const StudentState& state, const TeacherSpec& teacher);

/// The unique global optimum and the spurious local optimum on the unit-norm
/// manifold. Scaled copies alpha*v of either filter are optimal too in the
/// unnormalized parameterization; only the unit representatives are built here.
struct CriticalPair {
    Vector global_w;
    Vector global_a;
    Vector spurious_w;  // 1/sqrt(p) + spurious_w = -v*
    Vector spurious_a;  // (11^T + (pi-1)I)^{-1} (11^T - I) a*

    StudentState global() const { return {global_w, global_a}; }
    StudentState spurious() const { return {spurious_w, spurious_a}; }
};

/// Rank-one closed form of (11^T + (pi-1)I)^{-1} (11^T - I) a*.
Vector spurious_output_weights(const TeacherSpec& teacher);

CriticalPair spurious_point(const TeacherSpec& teacher);

/// Region where the a-gradient is dissipative with constant 1/(10 pi): a is
/// far from a*/2 or barely aligned with a*, phi <= 5pi/12, and the sum condition
/// -3 s^2 <= s 1^T a - s^2 <= 0 holds (s = 1^T a*).
struct RegionA {};
/// a^T a* >= m and v^T v* >= 0: the w-gradient is dissipative with constant m/8.
struct RegionK {
    double m = 0.0;
};
/// a^T a* in [m, M] and ||w - w*||^2 <= delta: a-dissipativity with slack delta/5.
struct RegionAmMdelta {
    double m = 0.0;
    double M = 0.0;
    double delta = 0.0;
};

using RegionSpec = std::variant<RegionA, RegionK, RegionAmMdelta>;

/// Throws DomainError unless m > 0, M >= m, delta > 0.
void validate_region(const RegionSpec& region);
std::string region_name(const RegionSpec& region);

/// Closed inequalities exactly as stated; the unit-norm condition is checked
/// to kManifoldTol.
bool region_membership(const StudentState& state, const RegionSpec& region, const TeacherSpec& teacher);

}  // namespace shortcut_gd
