#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shortcut_gd/geometry.hpp"
#include "shortcut_gd/landscape.hpp"

namespace shortcut_gd {

struct StepPair {
    double eta_w = 0.0;
    double eta_a = 0.0;
};

/// Step size warmup: a tiny filter step for the first stage1_iters iterations,
/// then larger steps for both layers.
struct SswSchedule {
    double eta_a_stage1 = 0.0;
    double eta_w_stage1 = 0.0;
    std::size_t stage1_iters = 0;
    double eta_a_stage2 = 0.0;
    double eta_w_stage2 = 0.0;
};

struct ConstantSchedule {
    double eta_a = 0.0;
    double eta_w = 0.0;
};

/// Step sizes from the convergence theorems:
///   stage I:  eta_a = pi / (20 (k + pi - 1)^2),  eta_w = C ||a*||^2 eta_a^2
///   stage II: eta   = min(m / (2 M^2), 5 pi^2 / (4 (k + pi - 1)^2)) for both.
struct TheoremRatesSchedule {
    std::size_t k = 0;
    double a_norm_sq = 0.0;
    double m = 0.0;
    double M = 0.0;
    double C = 1.0;
    std::size_t stage1_iters = 0;

    double stage1_eta_a() const;
    double stage1_eta_w() const;
    double stage2_eta() const;
};

using StepSchedule = std::variant<SswSchedule, ConstantSchedule, TheoremRatesSchedule>;

/// eta_a = 1/k^2 and eta_w = eta_a^2 for `warmup` iterations, then both 1/k^2.
SswSchedule ssw_schedule(std::size_t k, std::size_t warmup = 1000);
/// eta_a = eta_w = 1/k^2 throughout.
ConstantSchedule constant_schedule(std::size_t k);
/// Theorem rates for a teacher. Stage I lasts ceil(10 / eta_a) iterations unless
/// stage1_iters is given.
TheoremRatesSchedule theorem_rates_schedule(const TeacherSpec& teacher, double C = 1.0,
                                            std::optional<std::size_t> stage1_iters = std::nullopt);

/// Step sizes used for the update taking iterate t to t + 1.
StepPair step_sizes(const StepSchedule& schedule, std::size_t t);
/// Number of stage-I iterations (0 for constant schedules).
std::size_t warmup_length(const StepSchedule& schedule);
/// Throws DomainError on non-positive step sizes.
void validate_schedule(const StepSchedule& schedule);

struct TrajectoryRecord {
    std::size_t t = 0;
    double phi = 0.0;
    double a_dot_astar = 0.0;
    double w_err_sq = 0.0;
    double a_err_sq = 0.0;
    double loss = 0.0;
    /// 1^T a_t; kept for the sum-bound monitor, not part of the CSV columns.
    double sum_a = 0.0;
};

struct ConvergedGlobal {
    std::size_t iters = 0;
};
struct TrappedSpurious {
    std::size_t iters = 0;
};
struct Undecided {
    std::size_t iters = 0;
};
using Outcome = std::variant<ConvergedGlobal, TrappedSpurious, Undecided>;

std::string outcome_name(const Outcome& outcome);
std::size_t outcome_iters(const Outcome& outcome);
bool is_converged(const Outcome& outcome);
bool is_trapped(const Outcome& outcome);

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::size_t record_stride = 1;
    StudentState final_state;
    Outcome outcome = Undecided{};
    /// Set when a step hit a degenerate normalization; the run ended Undecided.
    std::optional<std::string> failure;
};

struct OutcomeThresholds {
    /// ||a - a*||^2 + ||w - w*||^2 at or below this counts as converged.
    double global_tol = 1e-6;
    /// Trapped needs phi >= pi - phi_tol ...
    double phi_tol = 0.1;
    /// ... and | ||w - w*||^2 - 4 | <= w_tol ...
    double w_tol = 0.2;
    /// ... and ||a - a_bar|| <= a_rel_tol * max(1, ||a_bar||).
    double a_rel_tol = 0.1;
};

struct RunOptions {
    std::size_t max_iters = 1'000'000;
    std::size_t record_stride = 1;
    OutcomeThresholds thresholds;
    /// When nonzero, classify every this many iterations and stop as soon as
    /// the iterate is classified TrappedSpurious. Off by default.
    std::size_t trap_check_every = 0;
};

Outcome classify_outcome(const StudentState& state, const TeacherSpec& teacher,
                         const OutcomeThresholds& thresholds = {}, std::size_t iters = 0);

/// One normalized GD step. Both gradients are evaluated at the old (w, a);
/// the filter step is followed by renormalization onto the unit sphere.
/// Throws DegenerateDirectionError if the filter collapses.
StudentState gd_step(const StudentState& state, const TeacherSpec& teacher, double eta_w, double eta_a);

/// w = 0 and a uniform in the ball of radius |1^T a*| / sqrt(k).
StudentState sample_init(const TeacherSpec& teacher, std::uint64_t seed);

Trajectory run(const StudentState& init, const TeacherSpec& teacher, const StepSchedule& schedule,
               const RunOptions& options);
Trajectory run(const StudentState& init, const TeacherSpec& teacher, const StepSchedule& schedule,
               std::size_t max_iters, std::size_t record_stride);

/// Plain CNN baseline: the filter v itself is trained on the unit sphere with
/// one step size for both layers. Shares the student's update because
/// w = v - 1/sqrt(p) gives identical filters, angles and errors.
Trajectory cnn_run(const Vector& init_v, const Vector& init_a, const TeacherSpec& teacher, double eta,
                   const RunOptions& options);

}  // namespace shortcut_gd
