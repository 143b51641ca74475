#include <cmath>

#include "doctest.h"
#include "shortcut_gd/errors.hpp"
#include "shortcut_gd/experiments.hpp"
#include "shortcut_gd/verification.hpp"
#include "support.hpp"

using namespace shortcut_gd;
using test_support::small_teacher;

namespace {

std::vector<TeacherSpec> probe_teachers(double a_norm = 0.0) {
    std::vector<TeacherSpec> out;
    std::uint64_t seed = 40;
    for (std::size_t k : {2, 5, 25}) {
        for (std::size_t p : {2, 4, 8}) out.push_back(random_teacher(k, p, seed++, a_norm));
    }
    return out;
}

}  // namespace

TEST_CASE("random teachers satisfy the shortcut prior") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto t = random_teacher(3, 2 + seed % 7, seed);
        CHECK(norm(t.w_star()) <= 1.0 + 1e-12);
        CHECK(t.strict_prior());
    }
    const auto unit = random_teacher(7, 4, 1, 1.0);
    CHECK(unit.a_norm_sq() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sampled region points are members and deterministic") {
    const auto t = random_teacher(5, 4, 9);
    const std::vector<RegionSpec> regions = {RegionA{}, RegionK{0.2 * t.a_norm_sq()}, RegionK{1.0},
                                             RegionAmMdelta{t.m(), t.M(), 0.01}};
    for (const auto& region : regions) {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const auto s = sample_region(region, t, seed);
            CHECK(region_membership(s, region, t));
            CHECK(s.on_manifold());
        }
        const auto a = sample_region(region, t, 77);
        const auto b = sample_region(region, t, 77);
        CHECK(a.w == b.w);
        CHECK(a.a == b.a);
    }
}

TEST_CASE("region K is reachable even when m exceeds the default proposal ball") {
    const auto t = random_teacher(4, 3, 5, 0.3);
    const RegionK region{1.0};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = sample_region(region, t, seed);
        CHECK(dot(s.a, t.a_star()) >= 1.0);
    }
}

TEST_CASE("sampling reports an infeasible region") {
    const auto t = random_teacher(4, 3, 5);
    RegionSamplingOptions none;
    none.max_proposals = 0;
    CHECK_THROWS_AS(sample_region(RegionA{}, t, 1, none), InfeasibleRegionError);
    CHECK_THROWS_AS(sample_region(RegionK{-1.0}, t, 1), DomainError);
}

TEST_CASE("slack vanishes for K at the true filter") {
    const auto t = random_teacher(5, 4, 12);
    const StudentState s{t.w_star(), {1.0, 2.0, 0.5, -0.1, 0.3}};
    CHECK(std::abs(dissipativity_slack(s, RegionK{0.5}, t)) <= 1e-30);
}

TEST_CASE("slack for A at a = 0 matches the closed form") {
    for (int i = 0; i < 20; ++i) {
        const auto t = random_teacher(3 + i % 4, 2 + i % 5, 300 + i);
        const auto s = sample_region(RegionA{}, t, 900 + i);
        StudentState z{s.w, Vector(t.k(), 0.0)};
        const double phi = angle_between(z.filter(), t.v_star());
        const double expected = t.sum_a() * t.sum_a() / (2.0 * kPi) + (g_phi(phi) - 1.0) / (2.0 * kPi) * t.a_norm_sq() -
                                t.a_norm_sq() / (10.0 * kPi);
        CHECK(dissipativity_slack(z, RegionA{}, t) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(expected >= 0.0);
    }
}

TEST_CASE("dissipativity holds on A and K for generic teachers") {
    for (const auto& t : probe_teachers()) {
        for (const auto& region :
             std::vector<RegionSpec>{RegionA{}, RegionK{0.1}, RegionK{0.2 * t.a_norm_sq()}, RegionK{1.0}}) {
            const auto rep = check_dissipativity(region, t, 1500, 3);
            INFO("region " << region_name(region) << " k=" << t.k() << " p=" << t.p());
            CHECK(rep.passed());
            CHECK(rep.min_slack >= -kInequalityTol);
            CHECK(rep.n_points == 1500);
        }
    }
}

TEST_CASE("aligned-band dissipativity holds for unit-norm output weights") {
    for (const auto& t : probe_teachers(1.0)) {
        for (double delta : {0.01, 0.1}) {
            const auto rep = check_dissipativity(RegionAmMdelta{t.m(), t.M(), delta}, t, 1500, 5);
            INFO("k=" << t.k() << " p=" << t.p() << " delta=" << delta);
            CHECK(rep.passed());
        }
    }
}

TEST_CASE("aligned-band slack of delta/5 is too small when ||a*||^2 > 1") {
    // At a^T a* = m the deficit is about (delta/4)(||a*||^2 - m), which exceeds delta/5 once ||a*||^2 > 1.
    const auto t = random_teacher(25, 8, 3, 4.0);
    const auto rep = check_dissipativity(RegionAmMdelta{t.m(), t.M(), 0.01}, t, 4000, 5);
    CHECK_FALSE(rep.passed());
    CHECK(rep.min_slack < -kInequalityTol);
}

TEST_CASE("outside region K the filter inequality fails somewhere") {
    const auto t = random_teacher(5, 4, 21);
    const RegionK region{0.2 * t.a_norm_sq()};
    std::vector<StudentState> points;
    for (int i = 0; i < 2000; ++i) {
        const auto s = random_manifold_state(t, CounterRng(4, i)());
        points.push_back(s);
    }
    const auto rep = check_dissipativity_at(region, t, points);
    CHECK_FALSE(rep.passed());
    CHECK(rep.min_slack < -kInequalityTol);
}

TEST_CASE("reports do not depend on the worker count") {
    const auto t = random_teacher(5, 4, 2);
    const RegionK region{0.2 * t.a_norm_sq()};
    const auto one = check_dissipativity(region, t, 500, 8, {}, 1);
    const auto three = check_dissipativity(region, t, 500, 8, {}, 3);
    CHECK(one.min_slack == three.min_slack);
    CHECK(one.violating_points.size() == three.violating_points.size());
    CHECK_THROWS_AS(check_dissipativity(region, t, 0, 8), DomainError);
}

TEST_CASE("monitor identifiers") {
    for (auto m : all_monitors()) CHECK(parse_monitor(monitor_name(m)) == m);
    CHECK_THROWS_AS(parse_monitor("no_such_monitor"), DomainError);
}

TEST_CASE("sum bound holds along an ssw run and fails with a huge output step") {
    const auto t = teacher_for_k(16);
    const auto init = sample_init(t, 3);
    const auto good = run(init, t, ssw_schedule(16), 20000, 1);
    const auto rep = monitor_trajectory(good, t, {Monitor::SumBound}, monitor_context(ssw_schedule(16)));
    CHECK(rep.violations.empty());
    CHECK_FALSE(rep.sampled);

    const StepSchedule broken = ConstantSchedule{10.0, 1.0 / 256.0};
    const auto bad = run(init, t, broken, 200, 1);
    const auto bad_rep = monitor_trajectory(bad, t, {Monitor::SumBound}, monitor_context(broken));
    CHECK_FALSE(bad_rep.violations.empty());
}

TEST_CASE("basin monitors hold from the basin entry of an ssw run") {
    const auto t = teacher_for_k(25);
    const auto schedule = ssw_schedule(25);
    const StudentState init{Vector(8, 0.0), fixed_a0_k25()};
    const auto traj = run(init, t, schedule, 1'000'000, 1);
    REQUIRE(is_converged(traj.outcome));
    const auto rep = monitor_trajectory(
        traj, t, {Monitor::SumBound, Monitor::BasinInvariant, Monitor::FilterContraction, Monitor::AlignmentBand},
        monitor_context(schedule));
    REQUIRE(rep.basin_entry.has_value());
    CHECK(*rep.basin_entry >= 1000);
    CHECK(rep.violations.empty());
}

TEST_CASE("filter contraction flags an increasing filter error") {
    const auto t = small_teacher();
    Trajectory traj;
    auto rec = [&](std::size_t tt, double phi, double werr) {
        TrajectoryRecord r;
        r.t = tt;
        r.phi = phi;
        r.a_dot_astar = t.m() + 0.1;
        r.w_err_sq = werr;
        r.sum_a = t.sum_a();
        return r;
    };
    traj.records = {rec(0, 0.3, 0.1), rec(1, 0.2, 0.05), rec(2, 0.25, 0.07)};
    const auto rep = monitor_trajectory(traj, t, {Monitor::FilterContraction}, MonitorContext{});
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].t == 2);
}

TEST_CASE("basin invariant is flagged when the basin is never entered") {
    const auto t = small_teacher();
    const auto cp = spurious_point(t);
    const auto traj = run(cp.spurious(), t, constant_schedule(3), 10, 1);
    const auto rep = monitor_trajectory(traj, t, {Monitor::BasinInvariant}, MonitorContext{});
    CHECK_FALSE(rep.basin_entry.has_value());
    CHECK(rep.violations.size() == 1);
}

TEST_CASE("closed-form certification on a small budget") {
    CertifyOptions options;
    options.n_states = 9;
    options.mc_samples = 40'000;
    const auto rep = certify_closed_forms(options);
    CHECK(rep.states.size() == 9);
    CHECK(rep.fd_passed);
    CHECK(rep.mc_fraction() >= 0.9);
    // 1 + p + k comparisons per state over the nine (k, p) combinations.
    CHECK(rep.mc_comparisons == 147);
}
