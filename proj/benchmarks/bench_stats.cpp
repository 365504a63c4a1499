#include <benchmark/benchmark.h>

#include "xaudit/rng.hpp"
#include "xaudit/stats.hpp"

#include <vector>

namespace {

using namespace xaudit;

void BM_mann_whitney_exact(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(3);
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
        a.push_back(rng.normal());
        b.push_back(rng.normal() + 0.5);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(mann_whitney_u(a, b, 0.05).p_value);
    }
}

void BM_mann_whitney_montecarlo(benchmark::State& state) {
    Rng rng(4);
    std::vector<double> a, b;
    for (int i = 0; i < 40; ++i) {
        a.push_back(rng.normal());
        b.push_back(rng.normal() + 0.25);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(mann_whitney_u(a, b, 0.05, 11).p_value);
    }
}

} // namespace

BENCHMARK(BM_mann_whitney_exact)->Arg(5)->Arg(8);
BENCHMARK(BM_mann_whitney_montecarlo)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
