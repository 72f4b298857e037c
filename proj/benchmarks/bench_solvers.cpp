#include <benchmark/benchmark.h>

#include <memory>

#include "ebsvie/mc_solver.hpp"
#include "ebsvie/oracle.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/pde.hpp"
#include "ebsvie/problem_io.hpp"
#include "ebsvie/variational.hpp"

using namespace ebsvie;

static void BM_SimulatePaths(benchmark::State& state) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const TimeGrid grid = make_grid(1.0, 50);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_paths(spec, grid, {0.0, {0.0}}, n, 1));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * 50);
}
BENCHMARK(BM_SimulatePaths)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

// Full triangle: cost grows like N^2 cells times the path count.
static void BM_RegressionSweep(benchmark::State& state) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const int n = static_cast<int>(state.range(0));
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, n), {0.0, {0.0}}, 10000, 1);
    for (auto _ : state) benchmark::DoNotOptimize(solve_ebsvie_regression(spec, ens, {}));
    state.counters["cells"] = static_cast<double>(TriangularIndex(n).size());
}
BENCHMARK(BM_RegressionSweep)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_BasisDegree(benchmark::State& state) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 25), {0.0, {0.0}}, 10000, 1);
    const BasisSpec basis{static_cast<int>(state.range(0))};
    for (auto _ : state) benchmark::DoNotOptimize(solve_ebsvie_regression(spec, ens, basis));
}
BENCHMARK(BM_BasisDegree)->DenseRange(2, 6, 2)->Unit(benchmark::kMillisecond);

static void BM_NonlocalPde(benchmark::State& state) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const int n = static_cast<int>(state.range(0));
    const TimeGrid grid = make_grid(1.0, n);
    const SpatialMesh mesh(-6.0, 6.0, 2 * n);
    for (auto _ : state) benchmark::DoNotOptimize(solve_nonlocal_pde(spec, grid, mesh));
}
BENCHMARK(BM_NonlocalPde)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_VariationalSweep(benchmark::State& state) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 25), {0.0, {0.0}}, 10000, 1);
    const TwoTimeField base = solve_ebsvie_regression(spec, ens, {});
    for (auto _ : state) benchmark::DoNotOptimize(solve_variational_ebsvie(spec, ens, base, {}));
}
BENCHMARK(BM_VariationalSweep)->Unit(benchmark::kMillisecond);

static void BM_PicardWindow(benchmark::State& state) {
    const ProblemSpec spec = catalog::nonlinear_ou();
    const PathEnsemble ens = simulate_paths(spec, make_grid(1.0, 100), {0.0, {0.0}}, 10000, 3);
    for (auto _ : state) benchmark::DoNotOptimize(picard_solve(spec, ens, 0.9, 1.0, {}));
}
BENCHMARK(BM_PicardWindow)->Unit(benchmark::kMillisecond);

static void BM_DeterministicOracle(benchmark::State& state) {
    const ProblemSpec spec = catalog::tanh_product();
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(deterministic_oracle(spec, n));
}
BENCHMARK(BM_DeterministicOracle)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
