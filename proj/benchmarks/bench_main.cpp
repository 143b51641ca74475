#include <benchmark/benchmark.h>

#include "shortcut_gd/experiments.hpp"
#include "shortcut_gd/landscape.hpp"
#include "shortcut_gd/mc_oracle.hpp"
#include "shortcut_gd/optimizer.hpp"
#include "shortcut_gd/verification.hpp"

using namespace shortcut_gd;

static void BM_LossAndGradients(benchmark::State& state) {
    const auto teacher = teacher_for_k(static_cast<std::size_t>(state.range(0)), 8, true);
    const auto s = sample_init(teacher, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(population_loss(s, teacher));
        benchmark::DoNotOptimize(grad_a(s, teacher));
        benchmark::DoNotOptimize(grad_w(s, teacher));
    }
}
BENCHMARK(BM_LossAndGradients)->Arg(25)->Arg(100);

static void BM_GdStep(benchmark::State& state) {
    const auto teacher = teacher_for_k(static_cast<std::size_t>(state.range(0)), 8, true);
    auto s = sample_init(teacher, 3);
    const double eta = 1.0 / static_cast<double>(state.range(0) * state.range(0));
    for (auto _ : state) {
        s = gd_step(s, teacher, eta, eta);
        benchmark::DoNotOptimize(s.a.data());
    }
}
BENCHMARK(BM_GdStep)->Arg(25)->Arg(100);

static void BM_SswRun(benchmark::State& state) {
    const auto teacher = teacher_for_k(25);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        RunOptions options;
        options.max_iters = 1'000'000;
        options.record_stride = options.max_iters + 1;
        benchmark::DoNotOptimize(run(sample_init(teacher, seed++), teacher, ssw_schedule(25), options).outcome);
    }
}
BENCHMARK(BM_SswRun)->Unit(benchmark::kMillisecond);

static void BM_MonteCarloLandscape(benchmark::State& state) {
    const auto teacher = random_teacher(5, 4, 11);
    const auto s = random_manifold_state(teacher, 12);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(mc_landscape(s, teacher, n, 1, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MonteCarloLandscape)->Arg(1 << 16)->Unit(benchmark::kMillisecond);

static void BM_CheckDissipativity(benchmark::State& state) {
    const auto teacher = random_teacher(25, 8, 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(check_dissipativity(RegionK{0.2 * teacher.a_norm_sq()}, teacher, 1000, 1, {}, 1));
    }
}
BENCHMARK(BM_CheckDissipativity)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
