#include <cmath>
#include <limits>

#include "doctest.h"
#include "shortcut_gd/errors.hpp"
#include "shortcut_gd/landscape.hpp"
#include "shortcut_gd/random.hpp"
#include "shortcut_gd/verification.hpp"
#include "support.hpp"

using namespace shortcut_gd;
using test_support::check_close;
using test_support::small_teacher;
using test_support::state_at_angle;

namespace {

// Frozen values from an independent high-precision evaluation of the printed
// (expanded) closed forms.
struct FrozenPoint {
    StudentState state;
    double phi;
    double loss;
    std::vector<double> grad_a;
    std::vector<double> grad_w;
};

TeacherSpec p4_teacher() {
    return TeacherSpec::create({0.7016464154456233, 0.35082320772281167, 0.6139406135149204, 0.08770580193070289},
                               {0.7, -1.2, 0.3, 2.0, -0.4});
}

FrozenPoint frozen_p2() {
    return {state_at_angle(0.3, {0.2, 0.4, -0.1}),
            0.62729521800161229,
            1.300465143091617,
            {-0.50838213254567258, -0.052851234548797369, -0.86887690736160683},
            {-0.01388226395289735, 0.044877585379717133}};
}

FrozenPoint frozen_p4() {
    const Vector v{0.10259783520851541, 0.9233805168766387, -0.3077935056255462, 0.20519567041703082};
    return {{sub(v, shortcut_direction(4)), {-0.5, 0.25, 1.5, 0.0, 0.8}},
            1.3438936910160447,
            1.6639588503066282,
            {-0.10917103996513487, 0.2610035049867259, 0.59663291643439704, -0.017118499906880941,
             0.40024060111953831},
            {0.10095608502303045, 0.021290058746353354, 0.10164286111162248, 0.0061809847973283891}};
}

// The printed expanded form of the loss, used to cross-check the regrouped implementation.
double expanded_loss(const StudentState& s, const TeacherSpec& t) {
    const double phi = angle_between(s.filter(), t.v_star());
    const double g = g_phi(phi);
    const double ad = dot(s.a, t.a_star());
    const double sa = sum(s.a);
    const double ss = t.sum_a();
    return 0.5 * ((kPi - 1.0) / (2.0 * kPi) * t.a_norm_sq() + (kPi - 1.0) / (2.0 * kPi) * norm_sq(s.a) -
                  (g - 1.0) / kPi * ad + ss * ss / (2.0 * kPi) + sa * sa / (2.0 * kPi) - ss * sa / kPi);
}

}  // namespace

TEST_CASE("closed forms match frozen high-precision values") {
    for (const auto& [teacher, point] : {std::pair{small_teacher(), frozen_p2()}, std::pair{p4_teacher(), frozen_p4()}}) {
        const auto terms = landscape_terms(point.state.filter(), point.state.a, teacher);
        CHECK(std::abs(terms.phi - point.phi) <= 1e-13);
        CHECK(std::abs(population_loss(point.state, teacher) - point.loss) <= 1e-13);
        check_close(grad_a(point.state, teacher), point.grad_a, 1e-13);
        check_close(grad_w(point.state, teacher), point.grad_w, 1e-13);
    }
}

TEST_CASE("regrouped loss equals the expanded form") {
    CounterRng rng(3);
    for (int i = 0; i < 300; ++i) {
        const auto teacher = random_teacher(1 + i % 7, 2 + i % 5, 100 + i);
        const auto s = random_manifold_state(teacher, 500 + i);
        const double a = population_loss(s, teacher);
        const double b = expanded_loss(s, teacher);
        CHECK(std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(b)));
    }
}

TEST_CASE("loss is nonnegative and vanishes only at the global optimum") {
    for (int i = 0; i < 300; ++i) {
        const auto teacher = random_teacher(1 + i % 6, 2 + i % 4, 900 + i);
        const auto s = random_manifold_state(teacher, 1300 + i);
        CHECK(population_loss(s, teacher) >= 0.0);
        const StudentState opt{teacher.w_star(), teacher.a_star()};
        const double eps = std::numeric_limits<double>::epsilon();
        CHECK(population_loss(opt, teacher) <= eps * eps * std::max(1.0, teacher.a_norm_sq()));
    }
}

TEST_CASE("filter gradient is tangent to the sphere") {
    for (int i = 0; i < 200; ++i) {
        const auto teacher = random_teacher(3, 2 + i % 7, 40 + i);
        const auto s = random_manifold_state(teacher, 70 + i);
        CHECK(std::abs(dot(grad_w(s, teacher), s.filter())) <= 1e-13);
    }
}

TEST_CASE("off-manifold states are rejected") {
    const auto t = small_teacher();
    StudentState s = state_at_angle(0.3, {0.0, 0.0, 0.0});
    s.w[0] += 1e-6;
    CHECK_THROWS_AS(population_loss(s, t), PreconditionError);
    CHECK_THROWS_AS(grad_a(s, t), PreconditionError);
    CHECK_THROWS_AS(grad_w(s, t), PreconditionError);
    CHECK_THROWS_AS(population_loss(state_at_angle(0.3, {0.0, 0.0}), t), PreconditionError);
}

TEST_CASE("spurious output weights match a direct linear solve") {
    check_close(spurious_output_weights(small_teacher()), {0.246330073552909, 0.9467433839392986, -0.22061213337135088},
                1e-14);
    check_close(spurious_output_weights(p4_teacher()),
                {-0.03928796392495311, 0.8479022292311407, 0.1474889188447509, -0.6463128329264909,
                 0.47434846369173284},
                1e-14);
}

TEST_CASE("critical pair structure") {
    const auto t = small_teacher();
    const auto cp = spurious_point(t);
    check_close(cp.global_w, t.w_star(), 0.0);
    check_close(cp.global_a, t.a_star(), 0.0);
    const auto spurious_filter = cp.spurious().filter();
    CHECK(std::abs(norm(spurious_filter) - 1.0) <= 1e-12);
    check_close(spurious_filter, {-0.6, -0.8}, 1e-12);
    CHECK(std::abs(population_loss(cp.spurious(), t) - 1.1454335287101394) <= 1e-13);
    CHECK(population_loss(cp.global(), t) == 0.0);
}

TEST_CASE("both critical points are stationary for random teachers") {
    for (int i = 0; i < 50; ++i) {
        const auto t = random_teacher(1 + i % 30, 2 + i % 9, 2000 + i);
        const auto cp = spurious_point(t);
        CHECK(norm(grad_a(cp.global(), t)) <= 1e-10);
        CHECK(norm(grad_w(cp.global(), t)) <= 1e-10);
        CHECK(norm(grad_a(cp.spurious(), t)) <= 1e-10);
        CHECK(norm(grad_w(cp.spurious(), t)) <= 1e-10);
        CHECK(population_loss(cp.spurious(), t) > 0.0);
    }
}

TEST_CASE("region predicates") {
    const auto t = small_teacher();
    const StudentState opt{t.w_star(), t.a_star()};
    CHECK(region_membership(opt, RegionK{0.2 * t.a_norm_sq()}, t));
    CHECK(region_membership(opt, RegionAmMdelta{t.m(), t.M(), 0.01}, t));
    // a = a* is aligned with a* and not far from a*/2, so it is outside A.
    CHECK_FALSE(region_membership(opt, RegionA{}, t));

    // a = 0 with the true filter satisfies every condition of A.
    CHECK(region_membership(StudentState{t.w_star(), {0.0, 0.0, 0.0}}, RegionA{}, t));

    // Obtuse filter leaves K.
    const auto cp = spurious_point(t);
    CHECK_FALSE(region_membership(StudentState{cp.spurious_w, t.a_star()}, RegionK{0.1}, t));

    // Filter far from v* leaves AmMdelta.
    CHECK_FALSE(region_membership(state_at_angle(0.3, t.a_star()), RegionAmMdelta{t.m(), t.M(), 0.01}, t));
}

TEST_CASE("region validation") {
    CHECK_THROWS_AS(validate_region(RegionK{0.0}), DomainError);
    CHECK_THROWS_AS(validate_region(RegionAmMdelta{1.0, 0.5, 0.1}), DomainError);
    CHECK_THROWS_AS(validate_region(RegionAmMdelta{1.0, 2.0, 0.0}), DomainError);
    CHECK_NOTHROW(validate_region(RegionA{}));
    CHECK(region_name(RegionA{}) == "A");
    CHECK(region_name(RegionK{1.0}) == "K");
    CHECK(region_name(RegionAmMdelta{1.0, 2.0, 0.1}) == "AmMdelta");
}
