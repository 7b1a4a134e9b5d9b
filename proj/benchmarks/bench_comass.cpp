#include <benchmark/benchmark.h>

#include "tame/comass.hpp"
#include "tame/rng.hpp"

using namespace tame;
using exterior::MultiCovector;
using exterior::PointMetric;

namespace {

PointMetric random_spd(Rng& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    return {n, a.transpose() * a + 0.2 * Eigen::MatrixXd::Identity(n, n)};
}

MultiCovector random_covector(Rng& rng, int n, int m) {
    MultiCovector phi = MultiCovector::zero(n, m);
    for (int i = 0; i < phi.coeffs.size(); ++i) phi.coeffs[i] = rng.normal();
    return phi;
}

void bench_comass_exact_deg1(benchmark::State& state) {
    Rng rng(1);
    const auto phi = random_covector(rng, 6, 1);
    const auto g = random_spd(rng, 6);
    for (auto _ : state) benchmark::DoNotOptimize(comass::comass_point(phi, g).value);
}
BENCHMARK(bench_comass_exact_deg1);

void bench_comass_exact_hodge(benchmark::State& state) {
    Rng rng(2);
    const auto phi = random_covector(rng, 6, 5);
    const auto g = random_spd(rng, 6);
    for (auto _ : state) benchmark::DoNotOptimize(comass::comass_point(phi, g).value);
}
BENCHMARK(bench_comass_exact_hodge);

void bench_comass_ascent(benchmark::State& state) {
    Rng rng(3);
    const auto phi = random_covector(rng, static_cast<int>(state.range(0)), 2);
    const auto g = random_spd(rng, static_cast<int>(state.range(0)));
    comass::OptimizerBudget budget;
    budget.starts = 8;
    for (auto _ : state) benchmark::DoNotOptimize(comass::comass_point(phi, g, budget).value);
}
BENCHMARK(bench_comass_ascent)->Arg(4)->Arg(6);

void bench_oracle_samples(benchmark::State& state) {
    Rng rng(4);
    const auto phi = random_covector(rng, 4, 2);
    const auto g = random_spd(rng, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(comass::oracle_comass(phi, g, state.range(0), 99));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bench_oracle_samples)->Arg(1024)->Arg(16384);

} // namespace
