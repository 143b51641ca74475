#include "shortcut_gd/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "shortcut_gd/errors.hpp"
#include "shortcut_gd/parallel.hpp"
#include "shortcut_gd/random.hpp"

namespace shortcut_gd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kBasinAngle = 5.0 * kPi / 12.0;

double cap_angle(const RegionSpec& region) {
    return std::visit(overloaded{
                          [](const RegionA&) { return kBasinAngle; },
                          [](const RegionK&) { return kPi / 2.0; },
                          [](const RegionAmMdelta& r) {
                              // ||v - v*||^2 = 2 - 2 cos(phi) <= delta
                              return std::acos(std::clamp(1.0 - r.delta / 2.0, -1.0, 1.0));
                          },
                      },
                      region);
}

std::uint64_t point_seed(std::uint64_t seed, std::size_t i) { return CounterRng(seed, i)(); }

// Interval of alpha = a^T a* / ||a*|| the region admits (infinite ends when open).
std::pair<double, double> alignment_interval(const RegionSpec& region, double a_norm) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(overloaded{
                          [&](const RegionA&) { return std::pair{-inf, inf}; },
                          [&](const RegionK& r) { return std::pair{r.m / a_norm, inf}; },
                          [&](const RegionAmMdelta& r) { return std::pair{r.m / a_norm, r.M / a_norm}; },
                      },
                      region);
}

}  // namespace

StudentState sample_region(const RegionSpec& region, const TeacherSpec& teacher, std::uint64_t seed,
                           const RegionSamplingOptions& options) {
    validate_region(region);
    CounterRng rng(seed);
    const auto shortcut = shortcut_direction(teacher.p());
    const double max_angle = cap_angle(region);
    const double a_norm = std::sqrt(teacher.a_norm_sq());
    const std::size_t k = teacher.k();

    // a = alpha * a*/||a*|| + a_perp. alpha is drawn uniformly from the region's
    // alignment interval clipped to [-R, R]; a_perp is uniform in a ball of
    // radius R orthogonal to a*. Regions without an alignment condition fall
    // back to a uniform ball of radius R.
    auto [lo, hi] = a_norm > 0.0 ? alignment_interval(region, a_norm)
                                 : std::pair{-std::numeric_limits<double>::infinity(),
                                             std::numeric_limits<double>::infinity()};
    double radius = options.a_radius_factor * a_norm;
    if (std::isfinite(lo)) radius = std::max(radius, 1.5 * std::abs(lo));
    const bool aligned = std::isfinite(lo) && a_norm > 0.0;
    const double alpha_hi = std::min(hi, std::max(radius, lo));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (std::size_t attempt = 0; attempt < options.max_proposals; ++attempt) {
        const auto v = random_in_cap(rng, teacher.v_star(), max_angle);
        Vector a;
        if (!aligned) {
            a = radius > 0.0 ? random_in_ball(rng, k, radius) : Vector(k, 0.0);
        } else {
            const double alpha = lo + (alpha_hi - lo) * unif(rng);
            a = random_in_ball(rng, k, radius);
            const double along = dot(a, teacher.a_star()) / a_norm;
            for (std::size_t j = 0; j < k; ++j) a[j] += (alpha - along) * teacher.a_star()[j] / a_norm;
        }
        StudentState s{sub(v, shortcut), std::move(a)};
        if (region_membership(s, region, teacher)) return s;
    }
    throw InfeasibleRegionError("sample_region: no point of region " + region_name(region) + " found in " +
                                std::to_string(options.max_proposals) + " proposals");
}

double dissipativity_constant(const RegionSpec& region) {
    return std::visit(overloaded{
                          [](const RegionA&) { return 1.0 / (10.0 * kPi); },
                          [](const RegionK& r) { return r.m / 8.0; },
                          [](const RegionAmMdelta&) { return (kPi - 1.0) / (2.0 * kPi); },
                      },
                      region);
}

double dissipativity_slack(const StudentState& state, const RegionSpec& region, const TeacherSpec& teacher) {
    require_on_manifold(state, teacher);
    const auto v = state.filter();
    Vector gv(teacher.p()), ga(teacher.k());
    gradients_at_filter(v, state.a, teacher, gv, ga);
    const double c = dissipativity_constant(region);

    // <-grad_a, a* - a>
    auto a_lhs = [&] {
        double s = 0.0;
        for (std::size_t j = 0; j < ga.size(); ++j) s -= ga[j] * (teacher.a_star()[j] - state.a[j]);
        return s;
    };
    const double a_gap = dist_sq(state.a, teacher.a_star());

    return std::visit(overloaded{
                          [&](const RegionA&) { return a_lhs() - c * a_gap; },
                          [&](const RegionK&) {
                              double lhs = 0.0;
                              for (std::size_t i = 0; i < gv.size(); ++i) {
                                  lhs -= gv[i] * (teacher.v_star()[i] - v[i]);
                              }
                              return lhs - c * dist_sq(state.w, teacher.w_star());
                          },
                          [&](const RegionAmMdelta& r) { return a_lhs() - (c * a_gap - r.delta / 5.0); },
                      },
                      region);
}

DissipativityReport check_dissipativity_at(const RegionSpec& region, const TeacherSpec& teacher,
                                           const std::vector<StudentState>& points) {
    DissipativityReport rep;
    rep.region = region;
    rep.n_points = points.size();
    rep.constant_used = dissipativity_constant(region);
    rep.min_slack = std::numeric_limits<double>::infinity();
    for (const auto& s : points) {
        const double slack = dissipativity_slack(s, region, teacher);
        rep.min_slack = std::min(rep.min_slack, slack);
        if (slack < -kInequalityTol) rep.violating_points.push_back(s);
    }
    return rep;
}

DissipativityReport check_dissipativity(const RegionSpec& region, const TeacherSpec& teacher, std::size_t n_points,
                                        std::uint64_t seed, const RegionSamplingOptions& options,
                                        std::size_t workers) {
    if (n_points == 0) throw DomainError("check_dissipativity: n_points must be positive");
    validate_region(region);
    std::vector<StudentState> points(n_points);
    std::vector<double> slack(n_points);
    parallel_for(
        n_points,
        [&](std::size_t i) {
            points[i] = sample_region(region, teacher, point_seed(seed, i), options);
            slack[i] = dissipativity_slack(points[i], region, teacher);
        },
        workers);

    DissipativityReport rep;
    rep.region = region;
    rep.n_points = n_points;
    rep.constant_used = dissipativity_constant(region);
    rep.min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_points; ++i) {
        rep.min_slack = std::min(rep.min_slack, slack[i]);
        if (slack[i] < -kInequalityTol) rep.violating_points.push_back(points[i]);
    }
    return rep;
}

const std::vector<Monitor>& all_monitors() {
    static const std::vector<Monitor> all = {Monitor::SumBound,          Monitor::AcuteAngle, Monitor::AlignmentBand,
                                             Monitor::BasinInvariant,    Monitor::FilterContraction,
                                             Monitor::FilterRate,        Monitor::OutputConvergence};
    return all;
}

std::string monitor_name(Monitor m) {
    switch (m) {
        case Monitor::SumBound: return "sum_bound";
        case Monitor::AcuteAngle: return "acute_angle";
        case Monitor::AlignmentBand: return "alignment_band";
        case Monitor::BasinInvariant: return "basin_invariant";
        case Monitor::FilterContraction: return "filter_contraction";
        case Monitor::FilterRate: return "filter_rate";
        case Monitor::OutputConvergence: return "output_convergence";
    }
    return "unknown";
}

Monitor parse_monitor(const std::string& id) {
    for (auto m : all_monitors()) {
        if (monitor_name(m) == id) return m;
    }
    throw DomainError("unknown monitor id: " + id);
}

MonitorContext monitor_context(const StepSchedule& schedule) {
    MonitorContext ctx;
    ctx.warmup_end = warmup_length(schedule);
    const auto eta = step_sizes(schedule, ctx.warmup_end);
    ctx.eta = std::min(eta.eta_w, eta.eta_a);
    return ctx;
}

MonitorReport monitor_trajectory(const Trajectory& traj, const TeacherSpec& teacher, const std::set<Monitor>& monitors,
                                 const MonitorContext& context) {
    MonitorReport rep;
    rep.sampled = traj.record_stride > 1;
    const auto& recs = traj.records;
    if (recs.empty()) return rep;

    const double tol = kInequalityTol;
    const double s = teacher.sum_a();
    const double m = teacher.m();
    const double M = teacher.M();
    auto flag = [&](Monitor mon, std::size_t t, double observed, double bound) {
        rep.violations.push_back({mon, t, observed, bound});
    };

    std::optional<std::size_t> entry;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        if (r.t >= context.warmup_end && r.a_dot_astar >= m && r.a_dot_astar <= M && r.phi <= kBasinAngle) {
            entry = i;
            break;
        }
    }
    if (entry) rep.basin_entry = recs[*entry].t;

    if (monitors.count(Monitor::SumBound)) {
        for (const auto& r : recs) {
            const double term = s * r.sum_a - s * s;
            if (term > tol) flag(Monitor::SumBound, r.t, term, 0.0);
            if (term < -3.0 * s * s - tol) flag(Monitor::SumBound, r.t, term, -3.0 * s * s);
        }
    }
    if (monitors.count(Monitor::AcuteAngle)) {
        for (const auto& r : recs) {
            if (r.phi > kBasinAngle + tol) flag(Monitor::AcuteAngle, r.t, r.phi, kBasinAngle);
        }
    }
    if (monitors.count(Monitor::AlignmentBand)) {
        bool entered = false;
        for (const auto& r : recs) {
            if (!entered && r.a_dot_astar >= m) entered = true;
            if (!entered) continue;
            if (r.a_dot_astar < m - tol) flag(Monitor::AlignmentBand, r.t, r.a_dot_astar, m);
            if (r.a_dot_astar > M + tol) flag(Monitor::AlignmentBand, r.t, r.a_dot_astar, M);
        }
    }

    const bool wants_basin = monitors.count(Monitor::BasinInvariant) || monitors.count(Monitor::FilterContraction) ||
                             monitors.count(Monitor::FilterRate) || monitors.count(Monitor::OutputConvergence);
    if (wants_basin && !entry) {
        // The restart hypotheses never held, so none of the stage-II bounds apply.
        if (monitors.count(Monitor::BasinInvariant)) {
            flag(Monitor::BasinInvariant, recs.back().t, recs.back().phi, kBasinAngle);
        }
        return rep;
    }
    if (!wants_basin) return rep;

    const std::size_t e = *entry;
    if (monitors.count(Monitor::BasinInvariant)) {
        for (std::size_t i = e; i < recs.size(); ++i) {
            const auto& r = recs[i];
            if (r.phi > kBasinAngle + tol) flag(Monitor::BasinInvariant, r.t, r.phi, kBasinAngle);
            if (r.a_dot_astar < m - tol) flag(Monitor::BasinInvariant, r.t, r.a_dot_astar, m);
            if (r.a_dot_astar > M + tol) flag(Monitor::BasinInvariant, r.t, r.a_dot_astar, M);
        }
    }
    if (monitors.count(Monitor::FilterContraction)) {
        for (std::size_t i = e + 1; i < recs.size(); ++i) {
            if (recs[i].w_err_sq > recs[i - 1].w_err_sq + tol) {
                flag(Monitor::FilterContraction, recs[i].t, recs[i].w_err_sq, recs[i - 1].w_err_sq);
            }
        }
    }
    if (monitors.count(Monitor::FilterRate)) {
        const double eta = context.eta;
        const double rho = 1.0 - eta * m / 4.0 + eta * eta * M * M / 4.0;
        const double base = recs[e].w_err_sq;
        for (std::size_t i = e; i < recs.size(); ++i) {
            const double steps = static_cast<double>(recs[i].t - recs[e].t);
            const double bound = std::pow(rho, steps) * base;
            if (recs[i].w_err_sq > bound + tol) flag(Monitor::FilterRate, recs[i].t, recs[i].w_err_sq, bound);
        }
    }
    if (monitors.count(Monitor::OutputConvergence)) {
        const double delta = context.delta;
        // Earliest record after which ||w - w*||^2 <= delta for the rest of the run.
        std::optional<std::size_t> settled;
        for (std::size_t i = recs.size(); i-- > e;) {
            if (recs[i].w_err_sq > delta) break;
            settled = i;
        }
        if (settled && context.eta > 0.0) {
            const auto& r0 = recs[*settled];
            const double ratio = r0.a_err_sq / delta;
            const double wait = ratio > 1.0 ? std::ceil(4.0 / context.eta * std::log(ratio)) : 0.0;
            for (std::size_t i = *settled; i < recs.size(); ++i) {
                if (static_cast<double>(recs[i].t - r0.t) < wait) continue;
                if (recs[i].a_err_sq > 5.0 * delta + tol) {
                    flag(Monitor::OutputConvergence, recs[i].t, recs[i].a_err_sq, 5.0 * delta);
                }
            }
        }
    }
    return rep;
}

TeacherSpec random_teacher(std::size_t k, std::size_t p, std::uint64_t seed, double a_norm) {
    CounterRng rng(seed, 0x7eac4e5ULL);
    // ||v* - 1/sqrt(p)|| <= 1 on the unit sphere  <=>  angle(v*, 1/sqrt(p)) <= pi/3.
    auto v_star = random_in_cap(rng, shortcut_direction(p), kPi / 3.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector a_star(k);
    do {
        for (auto& x : a_star) x = normal(rng);
    } while (norm(a_star) == 0.0);
    if (a_norm > 0.0) a_star = scaled(a_star, a_norm / norm(a_star));
    return TeacherSpec::create(std::move(v_star), std::move(a_star));
}

StudentState random_manifold_state(const TeacherSpec& teacher, std::uint64_t seed) {
    CounterRng rng(seed, 0x57a7eULL);
    const auto v = random_unit_vector(rng, teacher.p());
    auto a = random_in_ball(rng, teacher.k(), 2.0 * std::sqrt(teacher.a_norm_sq()));
    return StudentState{sub(v, shortcut_direction(teacher.p())), std::move(a)};
}

CertifyReport certify_closed_forms(const CertifyOptions& options) {
    if (options.n_states == 0) throw DomainError("certify: n_states must be positive");
    if (options.k_values.empty() || options.p_values.empty()) throw DomainError("certify: empty k or p list");
    const std::size_t n_combos = options.k_values.size() * options.p_values.size();

    std::vector<TeacherSpec> teachers;
    for (std::size_t c = 0; c < n_combos; ++c) {
        const auto k = options.k_values[c / options.p_values.size()];
        const auto p = options.p_values[c % options.p_values.size()];
        teachers.push_back(random_teacher(k, p, CounterRng(options.seed, c)()));
    }

    CertifyReport rep;
    for (std::size_t i = 0; i < options.n_states; ++i) {
        const auto& teacher = teachers[i % n_combos];
        const auto state_seed = CounterRng(options.seed ^ 0xce47ULL, i)();
        const auto state = random_manifold_state(teacher, state_seed);

        StateCertification sc;
        sc.k = teacher.k();
        sc.p = teacher.p();
        sc.fd = fd_grad_check(state, teacher, options.fd_step);

        const auto mc = mc_landscape(state, teacher, options.mc_samples, state_seed, options.workers);
        auto compare = [&](const McEstimate& est, const Vector& exact) {
            for (std::size_t j = 0; j < exact.size(); ++j) {
                const double diff = std::abs(est.value[j] - exact[j]);
                const double se = est.std_error[j];
                const double z = se > 0.0 ? diff / se : (diff <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity());
                ++sc.mc_comparisons;
                if (z <= options.mc_sigmas) ++sc.mc_agreeing;
                sc.max_abs_z = std::max(sc.max_abs_z, z);
            }
        };
        compare(mc.loss, Vector{population_loss(state, teacher)});
        compare(mc.grad_w, grad_w(state, teacher));
        compare(mc.grad_a, grad_a(state, teacher));

        rep.max_fd_error = std::max({rep.max_fd_error, sc.fd.max_rel_error_a, sc.fd.max_rel_error_w});
        rep.mc_comparisons += sc.mc_comparisons;
        rep.mc_agreeing += sc.mc_agreeing;
        rep.states.push_back(sc);
    }
    rep.fd_passed = rep.max_fd_error <= options.fd_tol;
    rep.mc_passed = rep.mc_fraction() >= options.mc_pass_fraction;
    return rep;
}

}  // namespace shortcut_gd
