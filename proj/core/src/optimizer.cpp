#include "shortcut_gd/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "shortcut_gd/errors.hpp"
#include "shortcut_gd/random.hpp"

namespace shortcut_gd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double kpi_sq(std::size_t k) {
    const double d = static_cast<double>(k) + kPi - 1.0;
    return d * d;
}

void require_positive(double eta, const char* what) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        std::ostringstream msg;
        msg << "schedule: " << what << " must be positive, got " << eta;
        throw DomainError(msg.str());
    }
}

// In-place normalized GD on the filter v = 1/sqrt(p) + w. Scratch buffers are
// owned by the caller so the hot loop does not allocate.
struct Stepper {
    const TeacherSpec& teacher;
    Vector grad_v;
    Vector grad_a;
    Vector next_v;

    explicit Stepper(const TeacherSpec& t) : teacher(t), grad_v(t.p()), grad_a(t.k()), next_v(t.p()) {}

    // Leaves (v, a) untouched when the filter degenerates.
    void step(Vector& v, Vector& a, double eta_w, double eta_a) {
        gradients_at_filter(v, a, teacher, grad_v, grad_a);
        double n2 = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            next_v[i] = v[i] - eta_w * grad_v[i];
            n2 += next_v[i] * next_v[i];
        }
        const double n = std::sqrt(n2);
        if (!(n >= kDegenerateNorm)) {
            throw DegenerateDirectionError("gd_step: filter collapsed to zero during normalization");
        }
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = next_v[i] / n;
        for (std::size_t j = 0; j < a.size(); ++j) a[j] -= eta_a * grad_a[j];
    }
};

StudentState to_state(const Vector& v, const Vector& a) {
    StudentState s;
    s.w.resize(v.size());
    const double c = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) s.w[i] = v[i] - c;
    s.a = a;
    return s;
}

TrajectoryRecord make_record(std::size_t t, const Vector& v, const Vector& a, const TeacherSpec& teacher) {
    TrajectoryRecord r;
    r.t = t;
    const auto terms = landscape_terms(v, a, teacher);
    r.phi = terms.phi;
    r.a_dot_astar = terms.a_dot_astar;
    r.w_err_sq = dist_sq(v, teacher.v_star());
    r.a_err_sq = dist_sq(a, teacher.a_star());
    r.loss = loss_at_filter(v, a, teacher);
    r.sum_a = terms.sum_a;
    return r;
}

Trajectory run_filter(Vector v, Vector a, const TeacherSpec& teacher, const StepSchedule& schedule,
                      const RunOptions& options) {
    validate_schedule(schedule);
    if (options.record_stride == 0) throw DomainError("run: record_stride must be positive");
    if (options.max_iters == 0) throw DomainError("run: max_iters must be positive");

    Trajectory traj;
    traj.record_stride = options.record_stride;
    Stepper stepper(teacher);
    const auto& v_star = teacher.v_star();
    const auto& a_star = teacher.a_star();

    std::size_t t = 0;
    auto finish = [&](Outcome outcome) {
        if (traj.records.empty() || traj.records.back().t != t) {
            traj.records.push_back(make_record(t, v, a, teacher));
        }
        traj.final_state = to_state(v, a);
        traj.outcome = outcome;
        return traj;
    };

    for (;; ++t) {
        if (t % options.record_stride == 0) traj.records.push_back(make_record(t, v, a, teacher));
        if (dist_sq(a, a_star) + dist_sq(v, v_star) <= options.thresholds.global_tol) {
            return finish(ConvergedGlobal{t});
        }
        if (t >= options.max_iters) {
            return finish(classify_outcome(to_state(v, a), teacher, options.thresholds, t));
        }
        if (options.trap_check_every != 0 && t > 0 && t % options.trap_check_every == 0) {
            const auto o = classify_outcome(to_state(v, a), teacher, options.thresholds, t);
            if (is_trapped(o)) return finish(o);
        }
        const auto eta = step_sizes(schedule, t);
        try {
            stepper.step(v, a, eta.eta_w, eta.eta_a);
        } catch (const DegenerateDirectionError& e) {
            traj.failure = e.what();
            return finish(Undecided{t});
        }
    }
}

}  // namespace

double TheoremRatesSchedule::stage1_eta_a() const { return kPi / (20.0 * kpi_sq(k)); }

double TheoremRatesSchedule::stage1_eta_w() const {
    const double ea = stage1_eta_a();
    return C * a_norm_sq * ea * ea;
}

double TheoremRatesSchedule::stage2_eta() const {
    return std::min(m / (2.0 * M * M), 5.0 * kPi * kPi / (4.0 * kpi_sq(k)));
}

SswSchedule ssw_schedule(std::size_t k, std::size_t warmup) {
    const double eta = 1.0 / static_cast<double>(k * k);
    return SswSchedule{eta, eta * eta, warmup, eta, eta};
}

ConstantSchedule constant_schedule(std::size_t k) {
    const double eta = 1.0 / static_cast<double>(k * k);
    return ConstantSchedule{eta, eta};
}

TheoremRatesSchedule theorem_rates_schedule(const TeacherSpec& teacher, double C,
                                            std::optional<std::size_t> stage1_iters) {
    TheoremRatesSchedule s;
    s.k = teacher.k();
    s.a_norm_sq = teacher.a_norm_sq();
    s.m = teacher.m();
    s.M = teacher.M();
    s.C = C;
    s.stage1_iters = stage1_iters.value_or(static_cast<std::size_t>(std::ceil(10.0 / s.stage1_eta_a())));
    return s;
}

StepPair step_sizes(const StepSchedule& schedule, std::size_t t) {
    return std::visit(overloaded{
                          [t](const SswSchedule& s) {
                              return t < s.stage1_iters ? StepPair{s.eta_w_stage1, s.eta_a_stage1}
                                                        : StepPair{s.eta_w_stage2, s.eta_a_stage2};
                          },
                          [](const ConstantSchedule& s) { return StepPair{s.eta_w, s.eta_a}; },
                          [t](const TheoremRatesSchedule& s) {
                              if (t < s.stage1_iters) return StepPair{s.stage1_eta_w(), s.stage1_eta_a()};
                              const double eta = s.stage2_eta();
                              return StepPair{eta, eta};
                          },
                      },
                      schedule);
}

std::size_t warmup_length(const StepSchedule& schedule) {
    return std::visit(overloaded{
                          [](const SswSchedule& s) { return s.stage1_iters; },
                          [](const ConstantSchedule&) { return std::size_t{0}; },
                          [](const TheoremRatesSchedule& s) { return s.stage1_iters; },
                      },
                      schedule);
}

void validate_schedule(const StepSchedule& schedule) {
    std::visit(overloaded{
                   [](const SswSchedule& s) {
                       require_positive(s.eta_a_stage1, "eta_a_stage1");
                       require_positive(s.eta_w_stage1, "eta_w_stage1");
                       require_positive(s.eta_a_stage2, "eta_a_stage2");
                       require_positive(s.eta_w_stage2, "eta_w_stage2");
                   },
                   [](const ConstantSchedule& s) {
                       require_positive(s.eta_a, "eta_a");
                       require_positive(s.eta_w, "eta_w");
                   },
                   [](const TheoremRatesSchedule& s) {
                       if (s.k == 0) throw DomainError("schedule: k must be positive");
                       require_positive(s.stage1_eta_a(), "stage-I eta_a");
                       require_positive(s.stage1_eta_w(), "stage-I eta_w");
                       require_positive(s.stage2_eta(), "stage-II eta");
                   },
               },
               schedule);
}

std::string outcome_name(const Outcome& outcome) {
    return std::visit(overloaded{
                          [](const ConvergedGlobal&) { return std::string("ConvergedGlobal"); },
                          [](const TrappedSpurious&) { return std::string("TrappedSpurious"); },
                          [](const Undecided&) { return std::string("Undecided"); },
                      },
                      outcome);
}

std::size_t outcome_iters(const Outcome& outcome) {
    return std::visit([](const auto& o) { return o.iters; }, outcome);
}

bool is_converged(const Outcome& outcome) { return std::holds_alternative<ConvergedGlobal>(outcome); }
bool is_trapped(const Outcome& outcome) { return std::holds_alternative<TrappedSpurious>(outcome); }

Outcome classify_outcome(const StudentState& state, const TeacherSpec& teacher,
                         const OutcomeThresholds& thresholds, std::size_t iters) {
    const auto v = state.filter();
    const double w_err = dist_sq(v, teacher.v_star());
    if (dist_sq(state.a, teacher.a_star()) + w_err <= thresholds.global_tol) return ConvergedGlobal{iters};

    const double phi = unit_angle(v, teacher.v_star());
    const auto a_bar = spurious_output_weights(teacher);
    const bool near_bar = std::sqrt(dist_sq(state.a, a_bar)) <= thresholds.a_rel_tol * std::max(1.0, norm(a_bar));
    if (phi >= kPi - thresholds.phi_tol && std::abs(w_err - 4.0) <= thresholds.w_tol && near_bar) {
        return TrappedSpurious{iters};
    }
    return Undecided{iters};
}

StudentState gd_step(const StudentState& state, const TeacherSpec& teacher, double eta_w, double eta_a) {
    require_on_manifold(state, teacher);
    require_positive(eta_w, "eta_w");
    require_positive(eta_a, "eta_a");
    auto v = state.filter();
    auto a = state.a;
    Stepper(teacher).step(v, a, eta_w, eta_a);
    return to_state(v, a);
}

StudentState sample_init(const TeacherSpec& teacher, std::uint64_t seed) {
    StudentState s;
    s.w.assign(teacher.p(), 0.0);
    const double radius = std::abs(teacher.sum_a()) / std::sqrt(static_cast<double>(teacher.k()));
    if (radius == 0.0) {
        s.a.assign(teacher.k(), 0.0);
        return s;
    }
    CounterRng rng(seed);
    s.a = random_in_ball(rng, teacher.k(), radius);
    return s;
}

Trajectory run(const StudentState& init, const TeacherSpec& teacher, const StepSchedule& schedule,
               const RunOptions& options) {
    require_on_manifold(init, teacher);
    return run_filter(init.filter(), init.a, teacher, schedule, options);
}

Trajectory run(const StudentState& init, const TeacherSpec& teacher, const StepSchedule& schedule,
               std::size_t max_iters, std::size_t record_stride) {
    RunOptions options;
    options.max_iters = max_iters;
    options.record_stride = record_stride;
    return run(init, teacher, schedule, options);
}

Trajectory cnn_run(const Vector& init_v, const Vector& init_a, const TeacherSpec& teacher, double eta,
                   const RunOptions& options) {
    if (init_v.size() != teacher.p() || init_a.size() != teacher.k()) {
        throw PreconditionError("cnn_run: dimensions do not match the teacher");
    }
    if (std::abs(norm(init_v) - 1.0) > kManifoldTol) throw PreconditionError("cnn_run: init_v must be a unit vector");
    return run_filter(init_v, init_a, teacher, ConstantSchedule{eta, eta}, options);
}

}  // namespace shortcut_gd
