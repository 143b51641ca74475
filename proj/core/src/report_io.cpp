#include "shortcut_gd/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "shortcut_gd/errors.hpp"

namespace shortcut_gd {

namespace {

using nlohmann::ordered_json;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
}

std::string xml_escape(const std::string& s) {
    std::string r;
    for (char c : s) {
        switch (c) {
            case '&': r += "&amp;"; break;
            case '<': r += "&lt;"; break;
            case '>': r += "&gt;"; break;
            case '"': r += "&quot;"; break;
            default: r += c;
        }
    }
    return r;
}

struct Panel {
    const char* label;
    double TrajectoryRecord::*field;
    bool log_scale;
};

constexpr Panel kPanels[] = {
    {"phi", &TrajectoryRecord::phi, false},
    {"a_dot_astar", &TrajectoryRecord::a_dot_astar, false},
    {"w_err_sq", &TrajectoryRecord::w_err_sq, true},
    {"a_err_sq", &TrajectoryRecord::a_err_sq, true},
    {"loss", &TrajectoryRecord::loss, true},
};

ordered_json vector_json(const Vector& v) { return ordered_json(v); }

ordered_json state_json(const StudentState& s) { return ordered_json{{"w", s.w}, {"a", s.a}}; }

bool is_experimental_teacher(const TeacherSpec& teacher) {
    if (teacher.p() < 2) return false;
    return teacher.v_star() == experimental_v_star(teacher.p());
}

ordered_json config_json(const SweepConfig& c) {
    ordered_json variants = ordered_json::array();
    for (auto v : c.variants) variants.push_back(variant_name(v));
    return ordered_json{
        {"k_values", c.k_values},
        {"n_trials", c.n_trials},
        {"base_seed", c.base_seed},
        {"variants", variants},
        {"p", c.p},
        {"max_iters", c.max_iters},
        {"ssw_warmup", c.ssw_warmup},
        {"cnn_eta", c.cnn_eta},
        {"init_radius_scale", c.init_radius_scale},
        {"trap_check_every", c.trap_check_every},
        {"allow_generic_k", c.allow_generic_k},
        {"thresholds",
         {{"global_tol", c.thresholds.global_tol},
          {"phi_tol", c.thresholds.phi_tol},
          {"w_tol", c.thresholds.w_tol},
          {"a_rel_tol", c.thresholds.a_rel_tol}}},
    };
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << kTrajectoryCsvHeader << '\n';
    for (const auto& r : traj.records) {
        out << r.t << ',' << fmt17(r.phi) << ',' << fmt17(r.a_dot_astar) << ',' << fmt17(r.w_err_sq) << ','
            << fmt17(r.a_err_sq) << ',' << fmt17(r.loss) << '\n';
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_trajectory_csv(traj, out);
    finish_output(out, path);
}

void write_trajectory_svg(const Trajectory& traj, std::ostream& out, const std::string& title,
                          std::size_t max_points) {
    constexpr double width = 900.0;
    constexpr double panel_h = 150.0;
    constexpr double gap = 40.0;
    constexpr double left = 90.0;
    constexpr double right = 20.0;
    constexpr double top = 40.0;
    constexpr std::size_t n_panels = std::size(kPanels);
    const double height = top + n_panels * (panel_h + gap);
    const double plot_w = width - left - right;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
        << "</text>\n";

    const auto& recs = traj.records;
    const std::size_t n = recs.size();
    const std::size_t stride = std::max<std::size_t>(1, (n + std::max<std::size_t>(max_points, 2) - 1) /
                                                           std::max<std::size_t>(max_points, 2));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (n > 0 && idx.back() != n - 1) idx.push_back(n - 1);

    const double t0 = n > 0 ? static_cast<double>(recs.front().t) : 0.0;
    const double t1 = n > 0 ? static_cast<double>(recs.back().t) : 1.0;
    const double t_span = t1 > t0 ? t1 - t0 : 1.0;

    for (std::size_t pi = 0; pi < n_panels; ++pi) {
        const auto& panel = kPanels[pi];
        const double y0 = top + pi * (panel_h + gap);

        auto value = [&](std::size_t i) {
            const double x = recs[i].*(panel.field);
            if (!panel.log_scale) return x;
            return std::log10(std::max(x, 1e-300));
        };
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (auto i : idx) {
            const double y = value(i);
            if (!std::isfinite(y)) continue;
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }

        out << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << plot_w << "\" height=\"" << panel_h
            << "\" fill=\"none\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << left << "\" y=\"" << y0 - 6 << "\">"
            << (panel.log_scale ? std::string("log10 ") + panel.label : std::string(panel.label)) << "</text>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">" << fmt_short(hi)
            << "</text>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << y0 + panel_h << "\" text-anchor=\"end\">" << fmt_short(lo)
            << "</text>\n";
        out << "<text x=\"" << left << "\" y=\"" << y0 + panel_h + 14 << "\">t = " << fmt_short(t0) << "</text>\n";
        out << "<text x=\"" << left + plot_w << "\" y=\"" << y0 + panel_h + 14 << "\" text-anchor=\"end\">t = "
            << fmt_short(t1) << "</text>\n";

        out << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.2\" points=\"";
        bool first = true;
        for (auto i : idx) {
            const double y = value(i);
            if (!std::isfinite(y)) continue;
            const double px = left + plot_w * (static_cast<double>(recs[i].t) - t0) / t_span;
            const double py = y0 + panel_h * (1.0 - (y - lo) / (hi - lo));
            if (!first) out << ' ';
            out << fmt_short(px) << ',' << fmt_short(py);
            first = false;
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
}

void write_trajectory_svg(const Trajectory& traj, const std::filesystem::path& path, const std::string& title,
                          std::size_t max_points) {
    auto out = open_output(path);
    write_trajectory_svg(traj, out, title, max_points);
    finish_output(out, path);
}

std::string teacher_json(const TeacherSpec& teacher, int indent) {
    ordered_json j{
        {"p", teacher.p()},
        {"k", teacher.k()},
        {"v_star", vector_json(teacher.v_star())},
        {"a_star", vector_json(teacher.a_star())},
        {"w_star", vector_json(teacher.w_star())},
        {"w_star_norm", norm(teacher.w_star())},
        {"sum_a_star", teacher.sum_a()},
        {"a_star_norm_sq", teacher.a_norm_sq()},
        {"m", teacher.m()},
        {"M", teacher.M()},
        {"strict_prior", teacher.strict_prior()},
    };
    if (is_experimental_teacher(teacher)) {
        const double angle = angle_between(teacher.v_star(), shortcut_direction(teacher.p()));
        j["notes"] = {
            {"angle_to_shortcut_over_pi_computed", angle / kPi},
            {"angle_to_shortcut_over_pi_quoted", kQuotedTeacherAngleOverPi},
            {"sum_a_star", teacher.sum_a()},
            {"quarter_a_star_norm_sq", 0.25 * teacher.a_norm_sq()},
            {"tabulated_k", is_tabulated_k(teacher.k())},
        };
    }
    return j.dump(indent);
}

std::string sweep_report_json(const SweepReport& report, int indent) {
    ordered_json cells = ordered_json::array();
    ordered_json timing = ordered_json::array();
    double total = 0.0;
    for (const auto& c : report.cells) {
        ordered_json cell{
            {"variant", variant_name(c.variant)},
            {"k", c.k},
            {"n_trials", c.n_trials},
            {"success_count", c.success_count},
            {"spurious_count", c.spurious_count},
            {"undecided_count", c.undecided_count},
            {"failed_count", c.failed_count},
            {"success_rate", c.success_rate},
            {"ci95", {c.interval.lo, c.interval.hi}},
        };
        cell["published_rate"] = c.published_rate ? ordered_json(*c.published_rate) : ordered_json(nullptr);
        cells.push_back(std::move(cell));
        timing.push_back({{"variant", variant_name(c.variant)}, {"k", c.k}, {"wall_seconds", c.wall_seconds}});
        total += c.wall_seconds;
    }

    ordered_json teachers = ordered_json::array();
    for (auto k : report.config.k_values) {
        teachers.push_back(ordered_json::parse(
            teacher_json(teacher_for_k(k, report.config.p, report.config.allow_generic_k), -1)));
    }

    ordered_json j{
        {"results", {{"config", config_json(report.config)}, {"teachers", teachers}, {"cells", cells}}},
        {"metadata", {{"wall_seconds_total", total}, {"cells", timing}}},
    };
    return j.dump(indent);
}

std::string dissipativity_report_json(const DissipativityReport& report, const TeacherSpec& teacher, int indent) {
    ordered_json region{{"name", region_name(report.region)}};
    std::visit(
        [&](const auto& r) {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, RegionK>) {
                region["m"] = r.m;
            } else if constexpr (std::is_same_v<R, RegionAmMdelta>) {
                region["m"] = r.m;
                region["M"] = r.M;
                region["delta"] = r.delta;
            }
        },
        report.region);
    ordered_json violating = ordered_json::array();
    for (const auto& s : report.violating_points) violating.push_back(state_json(s));
    ordered_json j{
        {"region", region},
        {"teacher", ordered_json::parse(teacher_json(teacher, -1))},
        {"n_points", report.n_points},
        {"constant_used", report.constant_used},
        {"min_slack", report.min_slack},
        {"n_violations", report.violating_points.size()},
        {"passed", report.passed()},
        {"violating_points", violating},
    };
    return j.dump(indent);
}

std::string trajectory_summary_json(const Trajectory& traj, const TeacherSpec& teacher, int indent) {
    ordered_json j{
        {"outcome", outcome_name(traj.outcome)},
        {"iterations", outcome_iters(traj.outcome)},
        {"record_stride", traj.record_stride},
        {"n_records", traj.records.size()},
        {"final_state", state_json(traj.final_state)},
        {"teacher", ordered_json::parse(teacher_json(teacher, -1))},
    };
    if (!traj.records.empty()) {
        const auto& r = traj.records.back();
        j["final_record"] = {{"t", r.t},
                             {"phi", r.phi},
                             {"a_dot_astar", r.a_dot_astar},
                             {"w_err_sq", r.w_err_sq},
                             {"a_err_sq", r.a_err_sq},
                             {"loss", r.loss}};
    }
    j["failure"] = traj.failure ? ordered_json(*traj.failure) : ordered_json(nullptr);
    return j.dump(indent);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    finish_output(out, path);
}

}  // namespace shortcut_gd
