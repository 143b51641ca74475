#pragma once

#include <cstddef>
#include <cstdint>

#include "shortcut_gd/geometry.hpp"

namespace shortcut_gd {

/// Plain Monte-Carlo estimate of an expectation (scalar or per-component).
struct McEstimate {
    Vector value;
    /// Sample standard deviation / sqrt(n), per component.
    Vector std_error;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

struct McGradients {
    McEstimate grad_w;
    McEstimate grad_a;
};

struct McLandscape {
    McEstimate loss;
    McEstimate grad_w;
    McEstimate grad_a;
};

/// Samples are drawn in fixed-size blocks; each block is reduced with shifted
/// sums and blocks are merged in index order, so results are bit-identical
/// for any worker count.
inline constexpr std::size_t kMcBlockSize = 4096;

/// Loss and both gradients from one set of n_samples Gaussian inputs. Sample i
/// uses the stream CounterRng(seed, i): k patches of p standard normals each.
/// Throws DomainError if n_samples < 2.
McLandscape mc_landscape(const StudentState& state, const TeacherSpec& teacher, std::size_t n_samples,
                         std::uint64_t seed, std::size_t workers = 0);

/// Estimates 1/2 E[(g - f)^2].
McEstimate mc_loss(const StudentState& state, const TeacherSpec& teacher, std::size_t n_samples,
                   std::uint64_t seed, std::size_t workers = 0);

/// Per-sample gradients: a-gradient -(g - f) relu(Z^T v); w-gradient
/// -(g - f) (I - v v^T) sum_j a_j 1{Z_j^T v > 0} Z_j (relu'(0) taken as 0).
McGradients mc_grads(const StudentState& state, const TeacherSpec& teacher, std::size_t n_samples,
                     std::uint64_t seed, std::size_t workers = 0);

struct FdReport {
    double max_rel_error_a = 0.0;
    double max_rel_error_w = 0.0;
};

/// Components whose analytic reference is below this magnitude are compared
/// in absolute terms.
inline constexpr double kFdAbsoluteFloor = 1e-8;

/// Central differences of the closed-form loss: in each a-coordinate, and in
/// each w-coordinate through the pullback w~ -> loss(renormalize_shortcut(w~), a).
/// Throws DomainError unless 0 < step <= 1e-3.
FdReport fd_grad_check(const StudentState& state, const TeacherSpec& teacher, double step);

}  // namespace shortcut_gd
