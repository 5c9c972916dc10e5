#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nzsg/expr.hpp"
#include "nzsg/montecarlo.hpp"
#include "nzsg/parabolic.hpp"
#include "nzsg/scenarios.hpp"

using namespace nzsg;

namespace {

void BM_LinearSolve1D(benchmark::State& state) {
    const int nodes = static_cast<int>(state.range(0));
    const Grid g{1, std::numbers::pi / 2.0, nodes, 1000, 1.0};
    const DiffusionMatrixField diffusion(1, [](double, const Vec&) { return Mat{Vec{std::numbers::sqrt2, 0.0}}; });
    const std::size_t n = g.node_count() * g.levels();
    const std::vector<Vec> drift(n, Vec{});
    const std::vector<double> source(n, 0.0);
    std::vector<double> terminal(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) terminal[i] = std::cos(g.node(i)[0]);
    for (auto _ : state) benchmark::DoNotOptimize(linear_parabolic_solve(g, diffusion, drift, source, terminal));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_LinearSolve1D)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_LinearSolve2D(benchmark::State& state) {
    const Grid g{2, std::numbers::pi / 2.0, static_cast<int>(state.range(0)), 100, 1.0};
    const DiffusionMatrixField diffusion(2, [](double, const Vec&) {
        return Mat{Vec{std::numbers::sqrt2, 0.0}, Vec{0.0, std::numbers::sqrt2}};
    });
    const std::size_t n = g.node_count() * g.levels();
    const std::vector<Vec> drift(n, Vec{});
    const std::vector<double> source(n, 0.0);
    std::vector<double> terminal(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) terminal[i] = std::cos(g.node(i)[0]) * std::cos(g.node(i)[1]);
    for (auto _ : state) benchmark::DoNotOptimize(linear_parabolic_solve(g, diffusion, drift, source, terminal));
}
BENCHMARK(BM_LinearSolve2D)->Arg(41)->Arg(81)->Unit(benchmark::kMillisecond);

void BM_PicardCase2(benchmark::State& state) {
    const GameSpec spec = builtin_scenario("case2-bangbang");
    const Grid g{1, 4.0, 161, 200, 1.0};
    const auto resolver = FeedbackResolver::default_for(spec);
    for (auto _ : state)
        benchmark::DoNotOptimize(picard_solve(spec, g, resolver, {1e-5, 100, {0.5, 0.25, 0.125, 0.0625}, 1}));
}
BENCHMARK(BM_PicardCase2)->Unit(benchmark::kMillisecond);

void BM_SimulatePaths(benchmark::State& state) {
    const GameSpec spec = builtin_scenario("case2-bangbang");
    const Grid g{1, 4.0, 81, 100, 1.0};
    const auto resolver = FeedbackResolver::default_for(spec);
    const ValueField field = picard_solve(spec, g, resolver, {1e-5, 100, {0.5, 0.25, 0.125}, 1}).first;
    SimulationOptions opts;
    opts.n_paths = static_cast<int>(state.range(0));
    opts.mode = state.range(1) ? SimulationMode::DriftlessGirsanov : SimulationMode::ControlledDynamics;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_paths(spec, {0.0, 0.0}, {&field, resolver}, opts));
    state.SetItemsProcessed(state.iterations() * opts.n_paths * opts.n_steps);
}
BENCHMARK(BM_SimulatePaths)->Args({10000, 0})->Args({10000, 1})->Unit(benchmark::kMillisecond);

void BM_ExprEvaluate(benchmark::State& state) {
    const Expr f = parse("(1 + 0.5*sin(x1))*u1 + (-1 + 0.5*cos(x1))*u2", {"t", "x1", "u1", "u2"});
    double x = 0.0;
    for (auto _ : state) {
        const double args[4] = {0.3, x, 1.0, 0.0};
        benchmark::DoNotOptimize(f.evaluate(args));
        x += 1e-6;
    }
}
BENCHMARK(BM_ExprEvaluate);

}  // namespace
BENCHMARK_MAIN();
