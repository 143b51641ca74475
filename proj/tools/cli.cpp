#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shortcut_gd/errors.hpp"
#include "shortcut_gd/experiments.hpp"
#include "shortcut_gd/random.hpp"
#include "shortcut_gd/report_io.hpp"
#include "shortcut_gd/verification.hpp"

namespace shortcut_gd::cli {

namespace {

struct ThresholdFlags {
    OutcomeThresholds values;

    void attach(CLI::App* cmd) {
        cmd->add_option("--global-tol", values.global_tol, "Converged when ||a-a*||^2 + ||w-w*||^2 <= this")
            ->capture_default_str();
        cmd->add_option("--phi-tol", values.phi_tol, "Trapped needs phi >= pi - this")->capture_default_str();
        cmd->add_option("--w-tol", values.w_tol, "Trapped needs | ||w-w*||^2 - 4 | <= this")->capture_default_str();
        cmd->add_option("--a-rel-tol", values.a_rel_tol, "Trapped needs ||a - a_bar|| <= this * max(1, ||a_bar||)")
            ->capture_default_str();
    }
};

struct RunFlags {
    std::size_t k = 25;
    std::size_t p = 8;
    bool generic_k = false;
    std::string schedule = "ssw";
    std::string init = "sample";
    std::uint64_t seed = 0;
    std::size_t max_iters = 1'000'000;
    std::size_t stride = 1;
    std::size_t warmup = 1000;
    double eta = 0.1;
    double theorem_c = 1.0;
    std::size_t stage1_iters = 0;
    std::size_t trap_check_every = 0;
    double init_radius_scale = 1.0;
    std::string out_prefix;
    std::vector<std::string> monitors;
    double delta = 1e-3;
    ThresholdFlags thresholds;
};

struct SweepFlags {
    SweepConfig config;
    std::vector<std::string> variants{"resnet_ssw", "resnet_constant", "cnn_baseline"};
    std::string out = "sweep.json";
    ThresholdFlags thresholds;
};

struct VerifyFlags {
    std::string region;
    double m = 0.0;
    double M = 0.0;
    double delta = 0.01;
    std::size_t points = 10'000;
    std::uint64_t seed = 1;
    std::size_t k = 25;
    std::size_t p = 8;
    bool random_teacher = false;
    std::uint64_t teacher_seed = 0;
    double a_norm = 0.0;
    double a_radius_factor = 3.0;
    std::size_t workers = 0;
    std::string json;
};

struct CheckGradFlags {
    CertifyOptions options;
    std::string json;
};

struct ShowTeacherFlags {
    std::size_t k = 25;
    std::size_t p = 8;
    bool generic_k = false;
};

int do_run(const RunFlags& f, std::ostream& out) {
    const auto teacher = teacher_for_k(f.k, f.p, f.generic_k);
    std::set<Monitor> monitors;
    for (const auto& id : f.monitors) monitors.insert(parse_monitor(id));

    RunOptions options;
    options.max_iters = f.max_iters;
    options.record_stride = f.stride;
    options.thresholds = f.thresholds.values;
    options.trap_check_every = f.trap_check_every;

    StudentState init;
    if (f.init == "fixed") {
        if (f.k != 25) throw PreconditionError("run: --init fixed is only defined for k = 25");
        init = StudentState{Vector(teacher.p(), 0.0), fixed_a0_k25()};
    } else if (f.init == "sample") {
        init = sample_init(teacher, f.seed);
        for (auto& x : init.a) x *= f.init_radius_scale;
    } else {
        throw PreconditionError("run: --init must be sample or fixed");
    }

    StepSchedule schedule;
    Trajectory traj;
    if (f.schedule == "cnn") {
        schedule = ConstantSchedule{f.eta, f.eta};
        CounterRng rng(f.seed, 1);
        traj = cnn_run(random_unit_vector(rng, teacher.p()), init.a, teacher, f.eta, options);
    } else {
        if (f.schedule == "ssw") {
            schedule = ssw_schedule(f.k, f.warmup);
        } else if (f.schedule == "constant") {
            schedule = constant_schedule(f.k);
        } else if (f.schedule == "theorem") {
            schedule = theorem_rates_schedule(teacher, f.theorem_c,
                                              f.stage1_iters == 0 ? std::nullopt
                                                                  : std::optional<std::size_t>(f.stage1_iters));
        } else {
            throw PreconditionError("run: --schedule must be ssw, constant, theorem or cnn");
        }
        traj = run(init, teacher, schedule, options);
    }

    const auto& last = traj.records.back();
    out << "outcome " << outcome_name(traj.outcome) << " after " << outcome_iters(traj.outcome) << " iterations"
        << "; phi = " << last.phi << ", ||w-w*||^2 = " << last.w_err_sq << ", ||a-a*||^2 = " << last.a_err_sq
        << ", loss = " << last.loss << '\n';
    if (traj.failure) out << "run stopped: " << *traj.failure << '\n';

    if (!f.out_prefix.empty()) {
        const std::filesystem::path prefix(f.out_prefix);
        auto with = [&](const char* ext) {
            auto p = prefix;
            p += ext;
            return p;
        };
        write_trajectory_csv(traj, with(".csv"));
        write_trajectory_svg(traj, with(".svg"), "k = " + std::to_string(f.k) + ", " + f.schedule + " schedule: " +
                                                     outcome_name(traj.outcome));
        write_text_file(with(".json"), trajectory_summary_json(traj, teacher));
        out << "wrote " << with(".csv").string() << ", " << with(".svg").string() << ", " << with(".json").string()
            << '\n';
    }

    if (!monitors.empty()) {
        auto ctx = monitor_context(schedule);
        ctx.delta = f.delta;
        const auto rep = monitor_trajectory(traj, teacher, monitors, ctx);
        out << "monitors: " << rep.violations.size() << " violation(s)" << (rep.sampled ? " (sampled records)" : "")
            << '\n';
        for (std::size_t i = 0; i < rep.violations.size() && i < 20; ++i) {
            const auto& v = rep.violations[i];
            out << "  " << monitor_name(v.monitor) << " at t = " << v.t << ": observed " << v.observed << ", bound "
                << v.bound << '\n';
        }
        if (!rep.violations.empty()) return kExitVerificationFailure;
    }
    return kExitOk;
}

int do_sweep(SweepFlags f, std::ostream& out) {
    f.config.variants.clear();
    for (const auto& id : f.variants) f.config.variants.push_back(parse_variant(id));
    f.config.thresholds = f.thresholds.values;
    const auto report = success_rate_sweep(f.config);
    for (const auto& c : report.cells) {
        out << variant_name(c.variant) << " k=" << c.k << ": " << c.success_count << "/" << c.n_trials
            << " converged, " << c.spurious_count << " spurious, " << c.undecided_count << " undecided; rate "
            << c.success_rate << " [" << c.interval.lo << ", " << c.interval.hi << "]";
        if (c.published_rate) out << " (published " << *c.published_rate << ")";
        out << '\n';
    }
    write_text_file(f.out, sweep_report_json(report));
    out << "wrote " << f.out << '\n';
    return kExitOk;
}

int do_verify(const VerifyFlags& f, std::ostream& out) {
    const auto teacher = f.random_teacher ? random_teacher(f.k, f.p, f.teacher_seed, f.a_norm) : teacher_for_k(f.k, f.p);
    RegionSpec region;
    if (f.region == "A") {
        region = RegionA{};
    } else if (f.region == "K") {
        region = RegionK{f.m > 0.0 ? f.m : 0.2 * teacher.a_norm_sq()};
    } else if (f.region == "AmMdelta") {
        region = RegionAmMdelta{f.m > 0.0 ? f.m : teacher.m(), f.M > 0.0 ? f.M : teacher.M(), f.delta};
    } else {
        throw PreconditionError("verify: --region must be A, K or AmMdelta");
    }
    RegionSamplingOptions sampling;
    sampling.a_radius_factor = f.a_radius_factor;
    const auto rep = check_dissipativity(region, teacher, f.points, f.seed, sampling, f.workers);
    out << "region " << region_name(region) << ": " << rep.n_points << " points, min slack " << rep.min_slack << ", "
        << rep.violating_points.size() << " violation(s), constant " << rep.constant_used << '\n';
    if (!f.json.empty()) {
        write_text_file(f.json, dissipativity_report_json(rep, teacher));
        out << "wrote " << f.json << '\n';
    }
    return rep.passed() ? kExitOk : kExitVerificationFailure;
}

int do_check_grad(const CheckGradFlags& f, std::ostream& out) {
    const auto rep = certify_closed_forms(f.options);
    for (std::size_t i = 0; i < rep.states.size(); ++i) {
        const auto& s = rep.states[i];
        out << "state " << i << " (k=" << s.k << ", p=" << s.p << "): fd a " << s.fd.max_rel_error_a << ", fd w "
            << s.fd.max_rel_error_w << ", mc " << s.mc_agreeing << "/" << s.mc_comparisons << " within "
            << f.options.mc_sigmas << " se, max |z| " << s.max_abs_z << '\n';
    }
    out << "finite differences: max relative error " << rep.max_fd_error << (rep.fd_passed ? " (pass)" : " (FAIL)")
        << '\n';
    out << "monte carlo: " << rep.mc_agreeing << "/" << rep.mc_comparisons << " = " << rep.mc_fraction()
        << (rep.mc_passed ? " (pass)" : " (FAIL)") << '\n';
    if (!f.json.empty()) {
        nlohmann::ordered_json j;
        j["max_fd_error"] = rep.max_fd_error;
        j["mc_comparisons"] = rep.mc_comparisons;
        j["mc_agreeing"] = rep.mc_agreeing;
        j["fd_passed"] = rep.fd_passed;
        j["mc_passed"] = rep.mc_passed;
        write_text_file(f.json, j.dump(2));
        out << "wrote " << f.json << '\n';
    }
    return rep.passed() ? kExitOk : kExitVerificationFailure;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Normalized gradient descent on a two-layer convolutional ResNet teacher-student model", "shortcut-gd"};
    app.set_config("--config", "", "INI file with one section per subcommand");
    app.require_subcommand(1);
    app.fallthrough();

    RunFlags rf;
    auto* run_cmd = app.add_subcommand("run", "Single trajectory");
    run_cmd->add_option("--k", rf.k, "Number of patches")->capture_default_str();
    run_cmd->add_option("--p", rf.p, "Patch dimension")->capture_default_str();
    run_cmd->add_flag("--generic-k", rf.generic_k, "Allow k without a tabulated teacher");
    run_cmd->add_option("--schedule", rf.schedule, "ssw, constant, theorem or cnn")->capture_default_str();
    run_cmd->add_option("--init", rf.init, "sample (w0 = 0, a0 in the ball) or fixed (k = 25 only)")
        ->capture_default_str();
    run_cmd->add_option("--seed", rf.seed, "Initialization seed")->capture_default_str();
    run_cmd->add_option("--max-iters", rf.max_iters)->capture_default_str();
    run_cmd->add_option("--stride", rf.stride, "Record every this many iterations")->capture_default_str();
    run_cmd->add_option("--warmup", rf.warmup, "Warmup length of the ssw schedule")->capture_default_str();
    run_cmd->add_option("--eta", rf.eta, "Step size of the cnn schedule")->capture_default_str();
    run_cmd->add_option("--theorem-c", rf.theorem_c, "Constant C of the theorem stage-I filter step")
        ->capture_default_str();
    run_cmd->add_option("--stage1-iters", rf.stage1_iters, "Theorem stage-I length (0: ceil(10/eta_a))")
        ->capture_default_str();
    run_cmd->add_option("--trap-check-every", rf.trap_check_every, "Stop early once trapped (0: never)")
        ->capture_default_str();
    run_cmd->add_option("--init-radius-scale", rf.init_radius_scale)->capture_default_str();
    run_cmd->add_option("--out-prefix", rf.out_prefix, "Write PREFIX.csv, PREFIX.svg and PREFIX.json");
    run_cmd->add_option("--monitors", rf.monitors,
                        "Trajectory monitors: sum_bound acute_angle alignment_band basin_invariant "
                        "filter_contraction filter_rate output_convergence");
    run_cmd->add_option("--delta", rf.delta, "Accuracy level of output_convergence")->capture_default_str();
    rf.thresholds.attach(run_cmd);

    SweepFlags sf;
    auto* sweep_cmd = app.add_subcommand("sweep", "Success-rate table");
    sweep_cmd->add_option("--k", sf.config.k_values, "Patch counts")->capture_default_str();
    sweep_cmd->add_option("--trials", sf.config.n_trials, "Trials per cell")->capture_default_str();
    sweep_cmd->add_option("--seed", sf.config.base_seed, "Trial i uses seed + i")->capture_default_str();
    sweep_cmd->add_option("--variants", sf.variants, "resnet_ssw resnet_constant cnn_baseline")
        ->capture_default_str();
    sweep_cmd->add_option("--p", sf.config.p)->capture_default_str();
    sweep_cmd->add_option("--max-iters", sf.config.max_iters)->capture_default_str();
    sweep_cmd->add_option("--warmup", sf.config.ssw_warmup)->capture_default_str();
    sweep_cmd->add_option("--cnn-eta", sf.config.cnn_eta)->capture_default_str();
    sweep_cmd->add_option("--init-radius-scale", sf.config.init_radius_scale)->capture_default_str();
    sweep_cmd->add_option("--trap-check-every", sf.config.trap_check_every)->capture_default_str();
    sweep_cmd->add_flag("--generic-k", sf.config.allow_generic_k);
    sweep_cmd->add_option("--workers", sf.config.workers, "Worker threads (0: environment or hardware)");
    sweep_cmd->add_option("--out", sf.out, "JSON report path")->capture_default_str();
    sf.thresholds.attach(sweep_cmd);

    VerifyFlags vf;
    auto* verify_cmd = app.add_subcommand("verify", "Dissipativity certification on a region");
    verify_cmd->add_option("--region", vf.region, "A, K or AmMdelta")->required();
    verify_cmd->add_option("--m", vf.m, "Lower alignment level (default: region dependent)");
    verify_cmd->add_option("--M", vf.M, "Upper alignment level of AmMdelta (default: teacher M)");
    verify_cmd->add_option("--delta", vf.delta)->capture_default_str();
    verify_cmd->add_option("--points", vf.points)->capture_default_str();
    verify_cmd->add_option("--seed", vf.seed)->capture_default_str();
    verify_cmd->add_option("--k", vf.k)->capture_default_str();
    verify_cmd->add_option("--p", vf.p)->capture_default_str();
    verify_cmd->add_flag("--random-teacher", vf.random_teacher, "Random teacher instead of the tabulated one");
    verify_cmd->add_option("--teacher-seed", vf.teacher_seed)->capture_default_str();
    verify_cmd->add_option("--a-norm", vf.a_norm, "Rescale the random teacher's a* to this norm (0: keep)");
    verify_cmd->add_option("--a-radius-factor", vf.a_radius_factor)->capture_default_str();
    verify_cmd->add_option("--workers", vf.workers);
    verify_cmd->add_option("--json", vf.json, "JSON report path");

    CheckGradFlags cf;
    cf.options.n_states = 9;
    auto* grad_cmd = app.add_subcommand("check-grad", "Closed forms against finite differences and Monte Carlo");
    grad_cmd->add_option("--states", cf.options.n_states)->capture_default_str();
    grad_cmd->add_option("--samples", cf.options.mc_samples)->capture_default_str();
    grad_cmd->add_option("--seed", cf.options.seed)->capture_default_str();
    grad_cmd->add_option("--fd-step", cf.options.fd_step)->capture_default_str();
    grad_cmd->add_option("--workers", cf.options.workers);
    grad_cmd->add_option("--json", cf.json, "JSON summary path");

    ShowTeacherFlags tf;
    auto* teacher_cmd = app.add_subcommand("show-teacher", "Print the teacher for k");
    teacher_cmd->add_option("--k", tf.k)->capture_default_str();
    teacher_cmd->add_option("--p", tf.p)->capture_default_str();
    teacher_cmd->add_flag("--generic-k", tf.generic_k);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (run_cmd->parsed()) return do_run(rf, out);
        if (sweep_cmd->parsed()) return do_sweep(sf, out);
        if (verify_cmd->parsed()) return do_verify(vf, out);
        if (grad_cmd->parsed()) return do_check_grad(cf, out);
        if (teacher_cmd->parsed()) {
            out << teacher_json(teacher_for_k(tf.k, tf.p, tf.generic_k)) << '\n';
            return kExitOk;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    }
    return kExitConfigError;
}

}  // namespace shortcut_gd::cli
