#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shortcut_gd/geometry.hpp"
#include "shortcut_gd/optimizer.hpp"

namespace shortcut_gd {

/// Patch counts with a tabulated teacher.
inline constexpr std::array<std::size_t, 7> kTabulatedKValues = {16, 25, 36, 49, 64, 81, 100};

/// Angle between the experimental v* and 1/sqrt(p) as quoted alongside the experiments.
inline constexpr double kQuotedTeacherAngleOverPi = 0.45;

bool is_tabulated_k(std::size_t k);

/// v* = (cos(7 pi/10), sin(7 pi/10), 0, ..., 0) in R^p, p >= 2.
Vector experimental_v_star(std::size_t p);

/// Tabulated output weights: ones, then minus-ones, then zeros.
struct OutputWeightCounts {
    std::size_t ones = 0;
    std::size_t minus_ones = 0;
    std::size_t zeros = 0;
};

/// Counts for a tabulated k, or ceil(0.54 k) ones / minus-ones / zero padding
/// when allow_generic is set. Throws DomainError otherwise.
OutputWeightCounts output_weight_counts(std::size_t k, bool allow_generic = false);

/// Experimental teacher for k patches of dimension p.
TeacherSpec teacher_for_k(std::size_t k, std::size_t p = 8, bool allow_generic = false);

/// The fixed k = 25 initialization of the output layer used for the trajectory figure.
Vector fixed_a0_k25();

enum class Variant { ResnetSsw, ResnetConstant, CnnBaseline };

std::string variant_name(Variant v);
/// "resnet_ssw", "resnet_constant" or "cnn_baseline"; throws DomainError.
Variant parse_variant(const std::string& id);
const std::vector<Variant>& all_variants();

/// Published success rate for a variant at a tabulated k.
std::optional<double> published_success_rate(Variant v, std::size_t k);

struct SweepConfig {
    std::vector<std::size_t> k_values{kTabulatedKValues.begin(), kTabulatedKValues.end()};
    std::size_t n_trials = 5000;
    std::uint64_t base_seed = 0;
    std::vector<Variant> variants = all_variants();
    OutcomeThresholds thresholds;
    std::size_t max_iters = 1'000'000;
    std::size_t p = 8;
    bool allow_generic_k = false;
    /// Length of the small filter step phase of resnet_ssw.
    std::size_t ssw_warmup = 1000;
    double cnn_eta = 0.1;
    /// Multiplies the radius |1^T a*| / sqrt(k) of the a0 ball. 1 is the stated law.
    double init_radius_scale = 1.0;
    /// Early exit once a trial sits in the spurious basin (0 disables).
    std::size_t trap_check_every = 1000;
    std::size_t workers = 0;
};

/// Throws PreconditionError on an invalid config.
void validate_config(const SweepConfig& config);

struct BinomialInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for successes out of n at the given normal quantile.
BinomialInterval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct SweepCell {
    Variant variant = Variant::ResnetSsw;
    std::size_t k = 0;
    std::size_t n_trials = 0;
    std::size_t success_count = 0;
    std::size_t spurious_count = 0;
    std::size_t undecided_count = 0;
    /// Trials that ended on a degenerate normalization or a run error (also counted undecided).
    std::size_t failed_count = 0;
    double success_rate = 0.0;
    BinomialInterval interval;
    std::optional<double> published_rate;
    double wall_seconds = 0.0;
};

struct SweepReport {
    SweepConfig config;
    std::vector<SweepCell> cells;

    const SweepCell* find(Variant v, std::size_t k) const;
};

/// Trial i of every cell draws its initialization from seed base_seed + i:
/// resnet variants use w0 = 0 and sample_init; cnn_baseline uses the same a0
/// and a uniform filter on the sphere from a separate stream of the same seed.
SweepReport success_rate_sweep(const SweepConfig& config);

/// Outcome of one sweep trial.
Outcome sweep_trial(Variant variant, const TeacherSpec& teacher, std::size_t trial, const SweepConfig& config);

enum class TrajectoryVariant { Ssw, Constant };

std::string trajectory_variant_name(TrajectoryVariant v);
TrajectoryVariant parse_trajectory_variant(const std::string& id);

struct TrajectoryExperimentOptions {
    std::size_t max_iters = 1'000'000;
    std::size_t record_stride = 1;
    OutcomeThresholds thresholds;
};

struct TrajectoryExperimentResult {
    TeacherSpec teacher;
    StepSchedule schedule;
    Trajectory trajectory;
    std::filesystem::path csv_path;
    std::filesystem::path svg_path;
};

/// Runs the k = 25 teacher from (w0 = 0, fixed_a0_k25) and writes
/// <out_prefix>.csv and <out_prefix>.svg. Throws IoError on file errors.
TrajectoryExperimentResult trajectory_experiment(TrajectoryVariant variant, const std::filesystem::path& out_prefix,
                                                 const TrajectoryExperimentOptions& options = {});

}  // namespace shortcut_gd
