#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "shortcut_gd/experiments.hpp"
#include "shortcut_gd/mc_oracle.hpp"
#include "shortcut_gd/optimizer.hpp"
#include "shortcut_gd/verification.hpp"

namespace shortcut_gd {

/// Header of the trajectory CSV.
inline constexpr const char* kTrajectoryCsvHeader = "t,phi,a_dot_astar,w_err_sq,a_err_sq,loss";

/// One row per record; reals with 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

/// Static SVG with one stacked panel per CSV diagnostic against t. Error and
/// loss panels use a log10 axis. At most max_points vertices per polyline.
void write_trajectory_svg(const Trajectory& traj, std::ostream& out, const std::string& title,
                          std::size_t max_points = 2000);
void write_trajectory_svg(const Trajectory& traj, const std::filesystem::path& path, const std::string& title,
                          std::size_t max_points = 2000);

/// Teacher fields and derived quantities as a JSON object. For the
/// experimental teacher it also lists the quoted vs computed angle to
/// 1/sqrt(p) and 1^T a* vs ||a*||^2 / 4.
std::string teacher_json(const TeacherSpec& teacher, int indent = 2);

/// {"results": ..., "metadata": ...}. Everything outside "metadata" is a pure
/// function of the config; wall times live only in "metadata".
std::string sweep_report_json(const SweepReport& report, int indent = 2);

std::string dissipativity_report_json(const DissipativityReport& report, const TeacherSpec& teacher, int indent = 2);

/// Outcome, terminal diagnostics and the file paths of a trajectory run.
std::string trajectory_summary_json(const Trajectory& traj, const TeacherSpec& teacher, int indent = 2);

/// Writes text to path, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace shortcut_gd
