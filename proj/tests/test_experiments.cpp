#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "shortcut_gd/errors.hpp"
#include "shortcut_gd/experiments.hpp"
#include "shortcut_gd/report_io.hpp"
#include "support.hpp"

using namespace shortcut_gd;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("shortcut_gd_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("tabulated output weights have the exact one/minus-one/zero counts") {
    struct Row {
        std::size_t k, ones, minus, zeros;
    };
    for (const auto& r : {Row{16, 9, 7, 0}, Row{25, 14, 11, 0}, Row{36, 19, 16, 1}, Row{49, 26, 22, 1},
                          Row{64, 34, 30, 0}, Row{81, 43, 38, 0}, Row{100, 52, 47, 1}}) {
        const auto t = teacher_for_k(r.k);
        std::size_t ones = 0, minus = 0, zeros = 0;
        for (double x : t.a_star()) {
            ones += x == 1.0;
            minus += x == -1.0;
            zeros += x == 0.0;
        }
        CHECK(ones == r.ones);
        CHECK(minus == r.minus);
        CHECK(zeros == r.zeros);
        CHECK(t.k() == r.k);
        CHECK(t.p() == 8);
        CHECK(std::abs(norm(t.v_star()) - 1.0) <= 1e-15);
    }
}

TEST_CASE("tabulated teacher reference values") {
    const auto t16 = teacher_for_k(16);
    CHECK(t16.sum_a() == 2.0);
    CHECK(t16.a_norm_sq() == 16.0);
    const auto t100 = teacher_for_k(100);
    CHECK(t100.sum_a() == 5.0);
    CHECK(t100.a_star().back() == 0.0);
    const auto v = experimental_v_star(8);
    CHECK(v[0] == std::cos(0.7 * kPi));
    CHECK(v[1] == std::sin(0.7 * kPi));
    for (std::size_t i = 2; i < 8; ++i) CHECK(v[i] == 0.0);
}

TEST_CASE("experimental teacher geometry") {
    const auto t = teacher_for_k(25);
    const double angle = angle_between(t.v_star(), shortcut_direction(8)) / kPi;
    CHECK(std::abs(angle - 0.47507722477410414) <= 1e-14);
    CHECK(std::abs(norm(t.w_star()) - 1.3577796341674038) <= 1e-14);
    CHECK_FALSE(t.strict_prior());
    // The sum of the tabulated weights is not a quarter of the squared norm.
    const auto t16 = teacher_for_k(16);
    CHECK(t16.sum_a() == 2.0);
    CHECK(0.25 * t16.a_norm_sq() == 4.0);
}

TEST_CASE("non-tabulated k needs the generic flag") {
    CHECK_THROWS_AS(teacher_for_k(20), DomainError);
    const auto t = teacher_for_k(20, 8, true);
    const auto c = output_weight_counts(20, true);
    CHECK(c.ones == 11);
    CHECK(c.minus_ones == 9);
    CHECK(c.ones + c.minus_ones + c.zeros == 20);
    CHECK(t.k() == 20);
    // Tabulated rows win over the generic rule.
    const auto c36 = output_weight_counts(36, true);
    CHECK(c36.ones == 19);
    CHECK(c36.zeros == 1);
    CHECK_THROWS_AS(experimental_v_star(1), DomainError);
}

TEST_CASE("fixed initial output weights") {
    const auto a0 = fixed_a0_k25();
    REQUIRE(a0.size() == 25);
    CHECK(a0.front() == -0.1268);
    CHECK(a0[1] == -0.1590);
    CHECK(a0.back() == 0.1809);
    // Its norm exceeds the radius |1^T a*| / sqrt(k) = 3/5 of the sampling ball.
    CHECK(std::abs(norm(a0) - 0.9519805617763422) <= 1e-15);
    CHECK(norm(a0) > std::abs(teacher_for_k(25).sum_a()) / 5.0);
}

TEST_CASE("variant names round-trip") {
    for (auto v : all_variants()) CHECK(parse_variant(variant_name(v)) == v);
    CHECK_THROWS_AS(parse_variant("resnet"), DomainError);
    CHECK(parse_trajectory_variant("ssw") == TrajectoryVariant::Ssw);
    CHECK(parse_trajectory_variant("constant") == TrajectoryVariant::Constant);
    CHECK_THROWS_AS(parse_trajectory_variant("cnn"), DomainError);
}

TEST_CASE("published rates") {
    CHECK(*published_success_rate(Variant::ResnetSsw, 49) == 1.0);
    CHECK(*published_success_rate(Variant::ResnetConstant, 64) == 0.8220);
    CHECK(*published_success_rate(Variant::CnnBaseline, 49) == 0.5426);
    CHECK_FALSE(published_success_rate(Variant::CnnBaseline, 20).has_value());
}

TEST_CASE("wilson interval reference values") {
    const auto a = wilson_interval(7, 10);
    CHECK(a.lo == doctest::Approx(0.39677814746114537).epsilon(1e-12));
    CHECK(a.hi == doctest::Approx(0.8922087325936989).epsilon(1e-12));
    const auto b = wilson_interval(0, 10);
    CHECK(b.lo == 0.0);
    CHECK(b.hi == doctest::Approx(0.27753279986288926).epsilon(1e-12));
    const auto c = wilson_interval(480, 500);
    CHECK(c.lo == doctest::Approx(0.9390264041651492).epsilon(1e-12));
    CHECK(c.hi == doctest::Approx(0.9739592026102227).epsilon(1e-12));
    CHECK(wilson_interval(10, 10).hi == 1.0);
    CHECK_THROWS_AS(wilson_interval(3, 0), DomainError);
    CHECK_THROWS_AS(wilson_interval(4, 3), DomainError);
}

TEST_CASE("wilson interval always contains the point estimate") {
    for (std::size_t n = 1; n <= 60; ++n) {
        for (std::size_t s = 0; s <= n; ++s) {
            const auto ci = wilson_interval(s, n);
            const double p = static_cast<double>(s) / static_cast<double>(n);
            REQUIRE(ci.lo <= p);
            REQUIRE(ci.hi >= p);
            REQUIRE(ci.lo >= 0.0);
            REQUIRE(ci.hi <= 1.0);
        }
    }
}

TEST_CASE("sweep config validation") {
    SweepConfig c;
    c.k_values.clear();
    CHECK_THROWS_AS(validate_config(c), PreconditionError);
    c = SweepConfig{};
    c.n_trials = 0;
    CHECK_THROWS_AS(validate_config(c), PreconditionError);
    c = SweepConfig{};
    c.k_values = {20};
    CHECK_THROWS_AS(validate_config(c), PreconditionError);
    c.allow_generic_k = true;
    CHECK_NOTHROW(validate_config(c));
    c = SweepConfig{};
    c.variants.clear();
    CHECK_THROWS_AS(validate_config(c), PreconditionError);
}

TEST_CASE("small sweep: arithmetic, determinism and json layout") {
    SweepConfig c;
    c.k_values = {16};
    c.n_trials = 12;
    c.base_seed = 5;
    c.max_iters = 200'000;
    const auto a = success_rate_sweep(c);
    const auto b = success_rate_sweep(c);
    REQUIRE(a.cells.size() == 3);
    for (const auto& cell : a.cells) {
        CHECK(cell.success_count + cell.spurious_count + cell.undecided_count == cell.n_trials);
        CHECK(cell.success_rate == doctest::Approx(static_cast<double>(cell.success_count) / 12.0));
        CHECK(cell.interval.lo <= cell.success_rate);
        CHECK(cell.interval.hi >= cell.success_rate);
        CHECK(cell.published_rate.has_value());
    }
    CHECK(a.find(Variant::ResnetSsw, 16)->success_count == 12);
    CHECK(a.find(Variant::ResnetSsw, 25) == nullptr);

    const auto ja = nlohmann::json::parse(sweep_report_json(a));
    const auto jb = nlohmann::json::parse(sweep_report_json(b));
    CHECK(ja["results"].dump() == jb["results"].dump());
    CHECK(ja.contains("metadata"));
    CHECK(ja["metadata"]["cells"].size() == 3);
    CHECK(ja["results"]["cells"][0]["variant"] == "resnet_ssw");
    CHECK_FALSE(ja["results"]["cells"][0].contains("wall_seconds"));
    CHECK(ja["results"]["teachers"][0]["notes"]["angle_to_shortcut_over_pi_quoted"] == 0.45);
}

TEST_CASE("sweep results do not depend on the worker count") {
    SweepConfig c;
    c.k_values = {16};
    c.n_trials = 8;
    c.variants = {Variant::ResnetConstant, Variant::CnnBaseline};
    c.workers = 1;
    const auto one = success_rate_sweep(c);
    c.workers = 3;
    const auto three = success_rate_sweep(c);
    for (std::size_t i = 0; i < one.cells.size(); ++i) {
        CHECK(one.cells[i].success_count == three.cells[i].success_count);
        CHECK(one.cells[i].spurious_count == three.cells[i].spurious_count);
    }
}

TEST_CASE("trial seeds follow base_seed + index") {
    SweepConfig c;
    c.base_seed = 100;
    const auto t = teacher_for_k(16);
    SweepConfig shifted = c;
    shifted.base_seed = 97;
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(outcome_name(sweep_trial(Variant::ResnetConstant, t, i, c)) ==
              outcome_name(sweep_trial(Variant::ResnetConstant, t, i + 3, shifted)));
    }
}

TEST_CASE("trajectory csv format") {
    Trajectory traj;
    TrajectoryRecord r;
    r.t = 0;
    r.phi = 0.1;
    r.a_dot_astar = 1.0 / 3.0;
    r.w_err_sq = 2.0;
    r.a_err_sq = 1e-300;
    r.loss = 0.0;
    traj.records.push_back(r);
    std::ostringstream out;
    write_trajectory_csv(traj, out);
    CHECK(out.str() ==
          "t,phi,a_dot_astar,w_err_sq,a_err_sq,loss\n"
          "0,0.10000000000000001,0.33333333333333331,2,1e-300,0\n");
}

TEST_CASE("csv values round-trip exactly") {
    const auto t = teacher_for_k(16);
    const auto traj = run(sample_init(t, 2), t, constant_schedule(16), 500, 50);
    std::ostringstream out;
    write_trajectory_csv(traj, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == kTrajectoryCsvHeader);
    for (const auto& rec : traj.records) {
        REQUIRE(std::getline(in, line));
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 6);
        CHECK(std::stoull(cells[0]) == rec.t);
        CHECK(std::stod(cells[1]) == rec.phi);
        CHECK(std::stod(cells[2]) == rec.a_dot_astar);
        CHECK(std::stod(cells[3]) == rec.w_err_sq);
        CHECK(std::stod(cells[4]) == rec.a_err_sq);
        CHECK(std::stod(cells[5]) == rec.loss);
    }
}

TEST_CASE("svg has one panel per diagnostic") {
    const auto t = teacher_for_k(16);
    const auto traj = run(sample_init(t, 2), t, constant_schedule(16), 3000, 1);
    std::ostringstream out;
    write_trajectory_svg(traj, out, "a < b & c", 100);
    const auto svg = out.str();
    CHECK(svg.rfind("<svg", 0) == 0);
    std::size_t polylines = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++polylines;
    CHECK(polylines == 5);
    CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
    CHECK(svg.find("log10 loss") != std::string::npos);
}

TEST_CASE("trajectory experiment writes deterministic files") {
    const auto dir = scratch_dir("trajectory");
    TrajectoryExperimentOptions options;
    options.max_iters = 4000;
    options.record_stride = 10;
    const auto a = trajectory_experiment(TrajectoryVariant::Ssw, dir / "a", options);
    const auto b = trajectory_experiment(TrajectoryVariant::Ssw, dir / "b", options);
    CHECK(std::filesystem::exists(a.csv_path));
    CHECK(std::filesystem::exists(a.svg_path));
    CHECK(slurp(a.csv_path) == slurp(b.csv_path));
    CHECK(a.trajectory.records.front().a_err_sq == doctest::Approx(dist_sq(fixed_a0_k25(), a.teacher.a_star())));
    std::filesystem::remove_all(dir);
}

TEST_CASE("file errors carry the path") {
    const auto dir = scratch_dir("io");
    const auto blocker = dir / "file";
    write_text_file(blocker, "x");
    try {
        write_text_file(blocker / "child.json", "{}");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("file") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("teacher json") {
    const auto j = nlohmann::json::parse(teacher_json(teacher_for_k(36)));
    CHECK(j["k"] == 36);
    CHECK(j["sum_a_star"] == 3.0);
    CHECK(j["strict_prior"] == false);
    CHECK(j["notes"]["quarter_a_star_norm_sq"] == 8.75);
    const auto plain = nlohmann::json::parse(teacher_json(TeacherSpec::create({0.6, 0.8}, {1.0})));
    CHECK_FALSE(plain.contains("notes"));
}
