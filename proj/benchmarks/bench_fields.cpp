#include <benchmark/benchmark.h>

#include "tame/fields.hpp"
#include "tame/submanifold.hpp"
#include "tame/tubular.hpp"

using namespace tame;
using namespace tame::fields;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

void bench_d_exterior(benchmark::State& state) {
    const Chart chart = Chart::torus(2, static_cast<int>(state.range(0)));
    const FormField f = sample_form(chart, 1, [](const Eigen::VectorXd& x) {
        return Eigen::Vector2d(std::sin(kTau * x[0]), std::cos(kTau * (x[0] + x[1])));
    });
    for (auto _ : state) benchmark::DoNotOptimize(d_exterior(f).values.sum());
}
BENCHMARK(bench_d_exterior)->Arg(64)->Arg(128);

void bench_atlas_locate(benchmark::State& state) {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const auto m = tubular::Submanifold::from_expressions(
        2, 1, {"t1", "0.2*sin(2*pi*t1)"}, {512, 0, 0, 0}, 1.0, "M");
    const auto atlas = tubular::build_tubular(m, flat, 0.1);
    Eigen::VectorXd p(2);
    double x = 0.0;
    for (auto _ : state) {
        x += 0.001;
        p << x - std::floor(x), 0.1 * std::sin(kTau * x);
        benchmark::DoNotOptimize(atlas->locate(p).dist);
    }
}
BENCHMARK(bench_atlas_locate);

void bench_integrate_form(benchmark::State& state) {
    const Chart chart = Chart::torus(2, 64);
    const auto m = tubular::Submanifold::from_expressions(
        2, 1, {"t1", "0.2*sin(2*pi*t1)"}, {1024, 0, 0, 0}, 1.0, "M");
    const FormField f = sample_form(chart, 1, [](const Eigen::VectorXd& x) {
        return Eigen::Vector2d(1.0 + 0.1 * std::sin(kTau * x[1]), 0.0);
    });
    for (auto _ : state) benchmark::DoNotOptimize(integrate_form(f, m));
}
BENCHMARK(bench_integrate_form);

} // namespace
