#include "shortcut_gd/landscape.hpp"

#include <cmath>
#include <sstream>

#include "shortcut_gd/errors.hpp"

namespace shortcut_gd {

namespace {

constexpr double kInv2Pi = 1.0 / (2.0 * kPi);

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

LandscapeTerms landscape_terms(ConstView v, ConstView a, const TeacherSpec& teacher) {
    LandscapeTerms t;
    t.cos_phi = std::clamp(dot(v, teacher.v_star()), -1.0, 1.0);
    t.phi = unit_angle(v, teacher.v_star());
    t.g = g_phi(t.phi);
    t.a_dot_astar = dot(a, teacher.a_star());
    t.sum_a = sum(a);
    return t;
}

double loss_at_filter(ConstView v, ConstView a, const TeacherSpec& teacher) {
    const auto t = landscape_terms(v, a, teacher);
    // Expanded form regrouped around (a - a*) and (1^T a - 1^T a*) so that it
    // vanishes exactly at the global optimum:
    //   (pi-1)/2pi (|a*|^2 + |a|^2) - (g-1)/pi a^T a*
    //     = (pi-1)/2pi |a - a*|^2 + (pi - g)/pi a^T a*.
    const double sum_gap = teacher.sum_a() - t.sum_a;
    const double inner = (kPi - 1.0) * kInv2Pi * dist_sq(a, teacher.a_star()) +
                         pi_minus_g(t.phi) / kPi * t.a_dot_astar + kInv2Pi * sum_gap * sum_gap;
    return 0.5 * inner;
}

LandscapeTerms gradients_at_filter(ConstView v, ConstView a, const TeacherSpec& teacher,
                                   std::span<double> grad_v, std::span<double> grad_a) {
    const auto t = landscape_terms(v, a, teacher);
    const auto& a_star = teacher.a_star();
    const double shift = kInv2Pi * (t.sum_a - teacher.sum_a());
    const double ca = (kPi - 1.0) * kInv2Pi;
    const double cs = (t.g - 1.0) * kInv2Pi;
    for (std::size_t j = 0; j < a.size(); ++j) grad_a[j] = shift + ca * a[j] - cs * a_star[j];

    const auto& v_star = teacher.v_star();
    const double pref = -t.a_dot_astar * (kPi - t.phi) * kInv2Pi;
    for (std::size_t i = 0; i < v.size(); ++i) grad_v[i] = pref * (v_star[i] - t.cos_phi * v[i]);
    return t;
}

void require_on_manifold(const StudentState& state, const TeacherSpec& teacher) {
    if (state.w.size() != teacher.p() || state.a.size() != teacher.k()) {
        throw PreconditionError("student state dimensions do not match the teacher");
    }
    if (!state.on_manifold()) {
        std::ostringstream msg;
        msg << "student state off manifold: ||1/sqrt(p) + w|| = " << norm(state.filter());
        throw PreconditionError(msg.str());
    }
}

double population_loss(const StudentState& state, const TeacherSpec& teacher) {
    require_on_manifold(state, teacher);
    return loss_at_filter(state.filter(), state.a, teacher);
}

Vector grad_a(const StudentState& state, const TeacherSpec& teacher) {
    require_on_manifold(state, teacher);
    Vector gv(teacher.p()), ga(teacher.k());
    gradients_at_filter(state.filter(), state.a, teacher, gv, ga);
    return ga;
}

Vector grad_w(const StudentState& state, const TeacherSpec& teacher) {
    require_on_manifold(state, teacher);
    Vector gv(teacher.p()), ga(teacher.k());
    gradients_at_filter(state.filter(), state.a, teacher, gv, ga);
    return gv;
}

Vector spurious_output_weights(const TeacherSpec& teacher) {
    // (11^T + (pi-1)I)^{-1} = (I - 11^T / (pi - 1 + k)) / (pi - 1), applied to
    // b = (11^T - I) a* = s1 - a*, whose entries sum to (k - 1) s.
    const double s = teacher.sum_a();
    const double k = static_cast<double>(teacher.k());
    const double correction = (k - 1.0) * s / (kPi - 1.0 + k);
    Vector out(teacher.k());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = ((s - teacher.a_star()[j]) - correction) / (kPi - 1.0);
    }
    return out;
}

CriticalPair spurious_point(const TeacherSpec& teacher) {
    CriticalPair cp;
    cp.global_w = teacher.w_star();
    cp.global_a = teacher.a_star();
    const auto shortcut = shortcut_direction(teacher.p());
    cp.spurious_w.resize(teacher.p());
    for (std::size_t i = 0; i < teacher.p(); ++i) cp.spurious_w[i] = exact_offset(shortcut[i], -teacher.v_star()[i]);
    cp.spurious_a = spurious_output_weights(teacher);
    return cp;
}

void validate_region(const RegionSpec& region) {
    std::visit(overloaded{
                   [](const RegionA&) {},
                   [](const RegionK& r) {
                       if (!(r.m > 0.0)) throw DomainError("RegionK: m must be positive");
                   },
                   [](const RegionAmMdelta& r) {
                       if (!(r.m > 0.0)) throw DomainError("RegionAmMdelta: m must be positive");
                       if (!(r.M >= r.m)) throw DomainError("RegionAmMdelta: M must be >= m");
                       if (!(r.delta > 0.0)) throw DomainError("RegionAmMdelta: delta must be positive");
                   },
               },
               region);
}

std::string region_name(const RegionSpec& region) {
    return std::visit(overloaded{
                          [](const RegionA&) { return std::string("A"); },
                          [](const RegionK&) { return std::string("K"); },
                          [](const RegionAmMdelta&) { return std::string("AmMdelta"); },
                      },
                      region);
}

bool region_membership(const StudentState& state, const RegionSpec& region, const TeacherSpec& teacher) {
    if (state.w.size() != teacher.p() || state.a.size() != teacher.k()) return false;
    if (!state.on_manifold()) return false;
    const auto v = state.filter();
    const double a_dot = dot(state.a, teacher.a_star());
    const double a_sq = teacher.a_norm_sq();

    return std::visit(
        overloaded{
            [&](const RegionA&) {
                Vector half_gap(state.a.size());
                for (std::size_t j = 0; j < half_gap.size(); ++j) {
                    half_gap[j] = state.a[j] - 0.5 * teacher.a_star()[j];
                }
                const bool weak_alignment = a_dot <= a_sq / 20.0 || norm_sq(half_gap) >= a_sq;
                const bool angle_ok = unit_angle(v, teacher.v_star()) <= 5.0 * kPi / 12.0;
                const double s = teacher.sum_a();
                const double sum_term = s * sum(state.a) - s * s;
                const bool sum_ok = sum_term >= -3.0 * s * s && sum_term <= 0.0;
                return weak_alignment && angle_ok && sum_ok;
            },
            [&](const RegionK& r) { return a_dot >= r.m && dot(v, teacher.v_star()) >= 0.0; },
            [&](const RegionAmMdelta& r) {
                return a_dot >= r.m && a_dot <= r.M && dist_sq(state.w, teacher.w_star()) <= r.delta;
            },
        },
        region);
}

}  // namespace shortcut_gd
