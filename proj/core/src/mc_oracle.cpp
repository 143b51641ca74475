#include "shortcut_gd/mc_oracle.hpp"

#include <cmath>
#include <random>

#include "shortcut_gd/errors.hpp"
#include "shortcut_gd/landscape.hpp"
#include "shortcut_gd/parallel.hpp"
#include "shortcut_gd/random.hpp"

namespace shortcut_gd {

namespace {

// Per-component count / mean / M2, mergeable with the Chan et al. update.
struct Moments {
    std::size_t n = 0;
    Vector mean;
    Vector m2;

    explicit Moments(std::size_t dim = 0) : mean(dim, 0.0), m2(dim, 0.0) {}

    void merge(const Moments& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n);
        const double nb = static_cast<double>(o.n);
        const double nt = na + nb;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double d = o.mean[i] - mean[i];
            mean[i] += d * nb / nt;
            m2[i] += o.m2[i] + d * d * na * nb / nt;
        }
        n += o.n;
    }
};

// Shifted sums within one block: accumulating x - x_first keeps the
// sum-of-squares formula well conditioned for a block of a few thousand samples.
struct BlockAccumulator {
    std::size_t n = 0;
    Vector shift;
    Vector s1;
    Vector s2;

    explicit BlockAccumulator(std::size_t dim) : shift(dim, 0.0), s1(dim, 0.0), s2(dim, 0.0) {}

    void push(ConstView x) {
        if (n == 0) std::copy(x.begin(), x.end(), shift.begin());
        ++n;
        for (std::size_t i = 0; i < shift.size(); ++i) {
            const double d = x[i] - shift[i];
            s1[i] += d;
            s2[i] += d * d;
        }
    }

    Moments moments() const {
        Moments m(shift.size());
        m.n = n;
        if (n == 0) return m;
        const double nn = static_cast<double>(n);
        for (std::size_t i = 0; i < shift.size(); ++i) {
            const double md = s1[i] / nn;
            m.mean[i] = shift[i] + md;
            m.m2[i] = std::max(s2[i] - nn * md * md, 0.0);
        }
        return m;
    }
};

McEstimate to_estimate(const Moments& mom, std::size_t offset, std::size_t dim, std::uint64_t seed) {
    McEstimate e;
    e.n_samples = mom.n;
    e.seed = seed;
    e.value.assign(mom.mean.begin() + offset, mom.mean.begin() + offset + dim);
    e.std_error.resize(dim);
    const double n = static_cast<double>(mom.n);
    for (std::size_t i = 0; i < dim; ++i) {
        const double var = std::max(mom.m2[offset + i], 0.0) / (n - 1.0);
        e.std_error[i] = std::sqrt(var / n);
    }
    return e;
}

}  // namespace

McLandscape mc_landscape(const StudentState& state, const TeacherSpec& teacher, std::size_t n_samples,
                         std::uint64_t seed, std::size_t workers) {
    if (n_samples < 2) throw DomainError("mc: n_samples must be at least 2");
    require_on_manifold(state, teacher);

    const std::size_t p = teacher.p();
    const std::size_t k = teacher.k();
    const auto v = normalized(state.filter());
    const auto& v_star = teacher.v_star();
    const auto& a_star = teacher.a_star();
    const auto& a = state.a;
    // Layout of one sample vector: [loss | grad_w (p) | grad_a (k)].
    const std::size_t dim = 1 + p + k;

    const std::size_t n_blocks = (n_samples + kMcBlockSize - 1) / kMcBlockSize;
    std::vector<Moments> blocks(n_blocks, Moments(dim));

    parallel_for(
        n_blocks,
        [&](std::size_t b) {
            BlockAccumulator acc(dim);
            Vector z(k * p);
            Vector sample(dim);
            Vector dir(p);
            std::normal_distribution<double> normal(0.0, 1.0);
            const std::size_t begin = b * kMcBlockSize;
            const std::size_t end = std::min(n_samples, begin + kMcBlockSize);
            for (std::size_t i = begin; i < end; ++i) {
                CounterRng rng(seed, i);
                normal.reset();
                for (auto& x : z) x = normal(rng);

                double teacher_out = 0.0;
                double student_out = 0.0;
                std::fill(dir.begin(), dir.end(), 0.0);
                for (std::size_t j = 0; j < k; ++j) {
                    const double* zj = z.data() + j * p;
                    double proj = 0.0;
                    double proj_star = 0.0;
                    for (std::size_t q = 0; q < p; ++q) {
                        proj += zj[q] * v[q];
                        proj_star += zj[q] * v_star[q];
                    }
                    if (proj_star > 0.0) teacher_out += a_star[j] * proj_star;
                    const double act = proj > 0.0 ? proj : 0.0;
                    student_out += a[j] * act;
                    sample[1 + p + j] = act;  // scaled by -(g - f) below
                    if (proj > 0.0) {
                        for (std::size_t q = 0; q < p; ++q) dir[q] += a[j] * zj[q];
                    }
                }
                const double resid = teacher_out - student_out;
                sample[0] = 0.5 * resid * resid;
                const double along = dot(dir, v);
                for (std::size_t q = 0; q < p; ++q) sample[1 + q] = -resid * (dir[q] - along * v[q]);
                for (std::size_t j = 0; j < k; ++j) sample[1 + p + j] *= -resid;
                acc.push(sample);
            }
            blocks[b] = acc.moments();
        },
        workers);

    Moments total(dim);
    for (const auto& blk : blocks) total.merge(blk);

    McLandscape out;
    out.loss = to_estimate(total, 0, 1, seed);
    out.grad_w = to_estimate(total, 1, p, seed);
    out.grad_a = to_estimate(total, 1 + p, k, seed);
    return out;
}

McEstimate mc_loss(const StudentState& state, const TeacherSpec& teacher, std::size_t n_samples, std::uint64_t seed,
                   std::size_t workers) {
    return mc_landscape(state, teacher, n_samples, seed, workers).loss;
}

McGradients mc_grads(const StudentState& state, const TeacherSpec& teacher, std::size_t n_samples,
                     std::uint64_t seed, std::size_t workers) {
    auto all = mc_landscape(state, teacher, n_samples, seed, workers);
    return McGradients{std::move(all.grad_w), std::move(all.grad_a)};
}

FdReport fd_grad_check(const StudentState& state, const TeacherSpec& teacher, double step) {
    if (!(step > 0.0 && step <= 1e-3)) throw DomainError("fd_grad_check: step must lie in (0, 1e-3]");
    require_on_manifold(state, teacher);

    const auto ga = grad_a(state, teacher);
    const auto gw = grad_w(state, teacher);

    auto error = [](double fd, double ref) {
        const double abs_err = std::abs(fd - ref);
        return std::abs(ref) < kFdAbsoluteFloor ? abs_err : abs_err / std::abs(ref);
    };

    FdReport rep;
    const auto v = state.filter();
    auto a = state.a;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double saved = a[j];
        a[j] = saved + step;
        const double up = loss_at_filter(v, a, teacher);
        a[j] = saved - step;
        const double down = loss_at_filter(v, a, teacher);
        a[j] = saved;
        rep.max_rel_error_a = std::max(rep.max_rel_error_a, error((up - down) / (2.0 * step), ga[j]));
    }

    auto w = state.w;
    auto pullback = [&](const Vector& w_tilde) {
        StudentState s{renormalize_shortcut(w_tilde), state.a};
        return loss_at_filter(s.filter(), s.a, teacher);
    };
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double saved = w[i];
        w[i] = saved + step;
        const double up = pullback(w);
        w[i] = saved - step;
        const double down = pullback(w);
        w[i] = saved;
        rep.max_rel_error_w = std::max(rep.max_rel_error_w, error((up - down) / (2.0 * step), gw[i]));
    }
    return rep;
}

}  // namespace shortcut_gd
