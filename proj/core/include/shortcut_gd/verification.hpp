#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "shortcut_gd/landscape.hpp"
#include "shortcut_gd/mc_oracle.hpp"
#include "shortcut_gd/optimizer.hpp"

namespace shortcut_gd {

/// Additive slack allowed on every certified inequality.
inline constexpr double kInequalityTol = 1e-9;

struct RegionSamplingOptions {
    /// Proposals for a come from the ball of radius a_radius_factor * ||a*||,
    /// widened when the region's alignment bound lies outside it.
    double a_radius_factor = 3.0;
    std::size_t max_proposals = 100'000;
};

/// Uniform direction v inside the region's angular cap around v* (exact cap
/// sampling, so thin caps such as ||w - w*||^2 <= delta cost nothing), w = v - 1/sqrt(p),
/// and a drawn from a ball (with its a*-component drawn uniformly from the
/// region's a^T a* interval, when it has one) then rejected against the
/// region's a-conditions.
/// The returned state always satisfies region_membership. Throws
/// InfeasibleRegionError when the proposal budget runs out.
StudentState sample_region(const RegionSpec& region, const TeacherSpec& teacher, std::uint64_t seed,
                           const RegionSamplingOptions& options = {});

/// Constant c in the region's dissipativity inequality: 1/(10 pi), m/8, or (pi-1)/(2 pi).
double dissipativity_constant(const RegionSpec& region);

/// LHS - RHS of the region's inequality at one state:
///   A:        <-grad_a, a* - a> - (1/(10 pi)) ||a - a*||^2
///   K:        <-grad_w, w* - w> - (m/8) ||w - w*||^2
///   AmMdelta: <-grad_a, a* - a> - ((pi-1)/(2 pi)) ||a - a*||^2 + delta/5
double dissipativity_slack(const StudentState& state, const RegionSpec& region, const TeacherSpec& teacher);

struct DissipativityReport {
    RegionSpec region;
    std::size_t n_points = 0;
    double min_slack = 0.0;
    std::vector<StudentState> violating_points;
    double constant_used = 0.0;

    bool passed() const { return violating_points.empty(); }
};

/// Point i is sample_region(region, teacher, seed + i), so the report is
/// identical for any worker count.
DissipativityReport check_dissipativity(const RegionSpec& region, const TeacherSpec& teacher, std::size_t n_points,
                                        std::uint64_t seed, const RegionSamplingOptions& options = {},
                                        std::size_t workers = 0);

/// Checks the same inequality as check_dissipativity on caller-supplied
/// states, without requiring membership. Used for out-of-region controls.
DissipativityReport check_dissipativity_at(const RegionSpec& region, const TeacherSpec& teacher,
                                           const std::vector<StudentState>& points);

// Trajectory monitors. Bounds come from the stage-wise convergence analysis.
enum class Monitor {
    /// -3 s^2 <= s 1^T a_t - s^2 <= 0 at every t (s = 1^T a*).
    SumBound,
    /// phi_t <= 5pi/12 at every t.
    AcuteAngle,
    /// Once a_t^T a* >= m it stays within [m, M].
    AlignmentBand,
    /// From the first basin entry at/after the warmup (m <= a^T a* <= M and
    /// phi <= 5pi/12), phi_t <= 5pi/12 and m <= a_t^T a* <= M thereafter.
    BasinInvariant,
    /// ||v_t - v*|| non-increasing from basin entry.
    FilterContraction,
    /// ||v_t - v*||^2 <= rho^s ||v_entry - v*||^2 with rho = 1 - eta m/4 + eta^2 M^2/4,
    /// s = iterations since basin entry.
    FilterRate,
    /// Once ||w_t - w*||^2 <= delta holds for the rest of the run, ||a_t - a*||^2 <= 5 delta
    /// after (4/eta) log(||a - a*||^2 / delta) further iterations.
    OutputConvergence,
};

std::string monitor_name(Monitor m);
/// Parses a monitor identifier (the names above in snake_case); throws DomainError.
Monitor parse_monitor(const std::string& id);
const std::vector<Monitor>& all_monitors();

struct MonitorContext {
    /// First iteration after the warmup stage.
    std::size_t warmup_end = 0;
    /// Second-stage step size (used by the rate monitors).
    double eta = 0.0;
    /// Accuracy level for OutputConvergence.
    double delta = 1e-3;
};

MonitorContext monitor_context(const StepSchedule& schedule);

struct MonitorViolation {
    Monitor monitor;
    std::size_t t = 0;
    double observed = 0.0;
    double bound = 0.0;
};

struct MonitorReport {
    std::vector<MonitorViolation> violations;
    /// Recorded with stride > 1: bounds were only checked at recorded iterates.
    bool sampled = false;
    /// Iteration at which BasinInvariant and the rate monitors restarted their clock.
    std::optional<std::size_t> basin_entry;
};

MonitorReport monitor_trajectory(const Trajectory& traj, const TeacherSpec& teacher, const std::set<Monitor>& monitors,
                                 const MonitorContext& context);

/// Random teacher with v* uniform on the cap ||v* - 1/sqrt(p)|| <= 1 and a*
/// with iid N(0, 1) entries rescaled to the requested norm (if positive).
TeacherSpec random_teacher(std::size_t k, std::size_t p, std::uint64_t seed, double a_norm = 0.0);

/// Uniform unit filter with w = v - 1/sqrt(p) and a uniform in the ball of
/// radius 2 ||a*||.
StudentState random_manifold_state(const TeacherSpec& teacher, std::uint64_t seed);

struct CertifyOptions {
    std::size_t n_states = 50;
    std::vector<std::size_t> k_values{2, 5, 25};
    std::vector<std::size_t> p_values{2, 4, 8};
    std::size_t mc_samples = 1'000'000;
    std::uint64_t seed = 7;
    double fd_step = 1e-6;
    /// Finite differences must agree to this relative error.
    double fd_tol = 1e-5;
    /// A Monte-Carlo comparison agrees when it lies within this many standard errors.
    double mc_sigmas = 4.0;
    /// Fraction of pooled Monte-Carlo comparisons that must agree.
    double mc_pass_fraction = 0.95;
    std::size_t workers = 0;
};

struct StateCertification {
    std::size_t k = 0;
    std::size_t p = 0;
    FdReport fd;
    std::size_t mc_comparisons = 0;
    std::size_t mc_agreeing = 0;
    double max_abs_z = 0.0;
};

struct CertifyReport {
    std::vector<StateCertification> states;
    double max_fd_error = 0.0;
    std::size_t mc_comparisons = 0;
    std::size_t mc_agreeing = 0;
    bool fd_passed = false;
    bool mc_passed = false;

    double mc_fraction() const {
        return mc_comparisons == 0 ? 0.0 : static_cast<double>(mc_agreeing) / static_cast<double>(mc_comparisons);
    }
    bool passed() const { return fd_passed && mc_passed; }
};

/// State i uses the (k, p) combination i mod (|k_values| |p_values|), a random
/// teacher per combination and random_manifold_state. Compares the closed-form
/// loss and gradients against central differences and against mc_landscape
/// (loss, every w- and a-gradient component pooled).
CertifyReport certify_closed_forms(const CertifyOptions& options);

/// Uniform point on the cap {u : ||u|| = 1, angle(u, center) <= max_angle}.
template <class Rng>
Vector random_in_cap(Rng& rng, ConstView center, double max_angle);

}  // namespace shortcut_gd

#include "shortcut_gd/detail/cap_sampling.hpp"
