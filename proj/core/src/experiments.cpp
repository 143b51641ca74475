#include "shortcut_gd/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "shortcut_gd/errors.hpp"
#include "shortcut_gd/parallel.hpp"
#include "shortcut_gd/random.hpp"
#include "shortcut_gd/report_io.hpp"

namespace shortcut_gd {

namespace {

struct PublishedRow {
    std::size_t k;
    OutputWeightCounts counts;
    double constant_rate;
    double cnn_rate;
};

constexpr std::array<PublishedRow, 7> kPublished = {{
    {16, {9, 7, 0}, 0.7042, 0.5348},
    {25, {14, 11, 0}, 0.7354, 0.5528},
    {36, {19, 16, 1}, 0.7776, 0.5312},
    {49, {26, 22, 1}, 0.7848, 0.5426},
    {64, {34, 30, 0}, 0.8220, 0.5192},
    {81, {43, 38, 0}, 0.8388, 0.5368},
    {100, {52, 47, 1}, 0.8426, 0.5374},
}};

const PublishedRow* published_row(std::size_t k) {
    for (const auto& r : kPublished) {
        if (r.k == k) return &r;
    }
    return nullptr;
}

}  // namespace

bool is_tabulated_k(std::size_t k) { return published_row(k) != nullptr; }

Vector experimental_v_star(std::size_t p) {
    if (p < 2) throw DomainError("experimental_v_star: p must be at least 2");
    Vector v(p, 0.0);
    v[0] = std::cos(0.7 * kPi);
    v[1] = std::sin(0.7 * kPi);
    return v;
}

OutputWeightCounts output_weight_counts(std::size_t k, bool allow_generic) {
    if (const auto* row = published_row(k)) return row->counts;
    if (!allow_generic) {
        throw DomainError("teacher_for_k: k = " + std::to_string(k) +
                          " has no tabulated teacher (use the generic constructor)");
    }
    if (k == 0) throw DomainError("teacher_for_k: k must be positive");
    OutputWeightCounts c;
    c.ones = static_cast<std::size_t>(std::ceil(0.54 * static_cast<double>(k)));
    c.minus_ones = static_cast<std::size_t>(std::floor(0.46 * static_cast<double>(k)));
    c.ones = std::min(c.ones, k);
    c.minus_ones = std::min(c.minus_ones, k - c.ones);
    c.zeros = k - c.ones - c.minus_ones;
    return c;
}

TeacherSpec teacher_for_k(std::size_t k, std::size_t p, bool allow_generic) {
    const auto c = output_weight_counts(k, allow_generic);
    Vector a(k, 0.0);
    std::fill_n(a.begin(), c.ones, 1.0);
    std::fill_n(a.begin() + static_cast<std::ptrdiff_t>(c.ones), c.minus_ones, -1.0);
    return TeacherSpec::create(experimental_v_star(p), std::move(a));
}

Vector fixed_a0_k25() {
    return {-0.1268, -0.1590, -0.1071, -0.1594, -0.4670, 0.1563, 0.1894, -0.2390, -0.0602,
            -0.5047, 0.0325,  -0.0886, 0.1514,  -0.0883, -0.0243, 0.1198, -0.2805, 0.0024,
            -0.0855, 0.0742,  -0.0976, -0.1768, 0.1207,  0.0049,  0.1809};
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::ResnetSsw: return "resnet_ssw";
        case Variant::ResnetConstant: return "resnet_constant";
        case Variant::CnnBaseline: return "cnn_baseline";
    }
    return "unknown";
}

Variant parse_variant(const std::string& id) {
    for (auto v : all_variants()) {
        if (variant_name(v) == id) return v;
    }
    throw DomainError("unknown variant '" + id + "' (expected resnet_ssw, resnet_constant or cnn_baseline)");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> all = {Variant::ResnetSsw, Variant::ResnetConstant, Variant::CnnBaseline};
    return all;
}

std::optional<double> published_success_rate(Variant v, std::size_t k) {
    const auto* row = published_row(k);
    if (row == nullptr) return std::nullopt;
    switch (v) {
        case Variant::ResnetSsw: return 1.0;
        case Variant::ResnetConstant: return row->constant_rate;
        case Variant::CnnBaseline: return row->cnn_rate;
    }
    return std::nullopt;
}

void validate_config(const SweepConfig& config) {
    if (config.k_values.empty()) throw PreconditionError("sweep: k_values must be nonempty");
    if (config.n_trials == 0) throw PreconditionError("sweep: n_trials must be at least 1");
    if (config.variants.empty()) throw PreconditionError("sweep: at least one variant is required");
    if (config.max_iters == 0) throw PreconditionError("sweep: max_iters must be positive");
    if (config.p < 2) throw PreconditionError("sweep: p must be at least 2");
    if (!(config.cnn_eta > 0.0)) throw PreconditionError("sweep: cnn_eta must be positive");
    if (!(config.init_radius_scale > 0.0)) throw PreconditionError("sweep: init_radius_scale must be positive");
    for (auto k : config.k_values) {
        if (k == 0) throw PreconditionError("sweep: k must be positive");
        if (!config.allow_generic_k && !is_tabulated_k(k)) {
            throw PreconditionError("sweep: k = " + std::to_string(k) + " has no tabulated teacher");
        }
    }
}

BinomialInterval wilson_interval(std::size_t successes, std::size_t n, double z) {
    if (n == 0) throw DomainError("wilson_interval: n must be positive");
    if (successes > n) throw DomainError("wilson_interval: successes exceed n");
    const double nn = static_cast<double>(n);
    const double ph = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (ph + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
    BinomialInterval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    // Exact endpoints at 0 and n; keeps the point estimate inside after rounding.
    ci.lo = std::min(ci.lo, ph);
    ci.hi = std::max(ci.hi, ph);
    return ci;
}

const SweepCell* SweepReport::find(Variant v, std::size_t k) const {
    for (const auto& c : cells) {
        if (c.variant == v && c.k == k) return &c;
    }
    return nullptr;
}

Outcome sweep_trial(Variant variant, const TeacherSpec& teacher, std::size_t trial, const SweepConfig& config) {
    const std::uint64_t seed = config.base_seed + trial;
    RunOptions options;
    options.max_iters = config.max_iters;
    options.record_stride = config.max_iters + 1;
    options.thresholds = config.thresholds;
    options.trap_check_every = config.trap_check_every;

    auto init = sample_init(teacher, seed);
    if (config.init_radius_scale != 1.0) {
        for (auto& x : init.a) x *= config.init_radius_scale;
    }

    const std::size_t k = teacher.k();
    switch (variant) {
        case Variant::ResnetSsw:
            return run(init, teacher, ssw_schedule(k, config.ssw_warmup), options).outcome;
        case Variant::ResnetConstant:
            return run(init, teacher, constant_schedule(k), options).outcome;
        case Variant::CnnBaseline: {
            CounterRng rng(seed, 1);
            const auto v0 = random_unit_vector(rng, teacher.p());
            return cnn_run(v0, init.a, teacher, config.cnn_eta, options).outcome;
        }
    }
    return Undecided{};
}

SweepReport success_rate_sweep(const SweepConfig& config) {
    validate_config(config);
    SweepReport report;
    report.config = config;

    for (auto variant : config.variants) {
        for (auto k : config.k_values) {
            const auto teacher = teacher_for_k(k, config.p, config.allow_generic_k);
            std::vector<Outcome> outcomes(config.n_trials, Undecided{});
            std::vector<char> failed(config.n_trials, 0);

            const auto start = std::chrono::steady_clock::now();
            parallel_for(
                config.n_trials,
                [&](std::size_t i) {
                    try {
                        outcomes[i] = sweep_trial(variant, teacher, i, config);
                    } catch (const std::exception&) {
                        outcomes[i] = Undecided{config.max_iters};
                        failed[i] = 1;
                    }
                },
                config.workers);
            const auto stop = std::chrono::steady_clock::now();

            SweepCell cell;
            cell.variant = variant;
            cell.k = k;
            cell.n_trials = config.n_trials;
            for (std::size_t i = 0; i < config.n_trials; ++i) {
                if (is_converged(outcomes[i])) {
                    ++cell.success_count;
                } else if (is_trapped(outcomes[i])) {
                    ++cell.spurious_count;
                } else {
                    ++cell.undecided_count;
                }
                cell.failed_count += failed[i];
            }
            cell.success_rate = static_cast<double>(cell.success_count) / static_cast<double>(cell.n_trials);
            cell.interval = wilson_interval(cell.success_count, cell.n_trials);
            cell.published_rate = published_success_rate(variant, k);
            cell.wall_seconds = std::chrono::duration<double>(stop - start).count();
            report.cells.push_back(cell);
        }
    }
    return report;
}

std::string trajectory_variant_name(TrajectoryVariant v) { return v == TrajectoryVariant::Ssw ? "ssw" : "constant"; }

TrajectoryVariant parse_trajectory_variant(const std::string& id) {
    if (id == "ssw") return TrajectoryVariant::Ssw;
    if (id == "constant") return TrajectoryVariant::Constant;
    throw DomainError("unknown trajectory variant '" + id + "' (expected ssw or constant)");
}

TrajectoryExperimentResult trajectory_experiment(TrajectoryVariant variant, const std::filesystem::path& out_prefix,
                                                 const TrajectoryExperimentOptions& options) {
    auto teacher = teacher_for_k(25);
    StepSchedule schedule = variant == TrajectoryVariant::Ssw ? StepSchedule{ssw_schedule(25)}
                                                              : StepSchedule{constant_schedule(25)};
    StudentState init{Vector(teacher.p(), 0.0), fixed_a0_k25()};

    RunOptions run_options;
    run_options.max_iters = options.max_iters;
    run_options.record_stride = options.record_stride;
    run_options.thresholds = options.thresholds;
    auto traj = run(init, teacher, schedule, run_options);

    TrajectoryExperimentResult result{std::move(teacher), schedule, std::move(traj), {}, {}};
    result.csv_path = out_prefix;
    result.csv_path += ".csv";
    result.svg_path = out_prefix;
    result.svg_path += ".svg";
    write_trajectory_csv(result.trajectory, result.csv_path);
    write_trajectory_svg(result.trajectory, result.svg_path,
                         "k = 25, " + trajectory_variant_name(variant) + " schedule: " +
                             outcome_name(result.trajectory.outcome));
    return result;
}

}  // namespace shortcut_gd
