#include <benchmark/benchmark.h>

#include "xaudit/explainers.hpp"
#include "xaudit/metrics.hpp"
#include "xaudit/rng.hpp"

#include <vector>

namespace {

using namespace xaudit;

MlpModel bench_mlp(int d) {
    Rng rng(42);
    std::vector<int> widths{d, 50, 100, 200, 1};
    std::vector<MlpModel::Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        MlpModel::Layer layer;
        layer.weights.resize(widths[l + 1], widths[l]);
        layer.biases.resize(widths[l + 1]);
        for (int r = 0; r < widths[l + 1]; ++r) {
            for (int c = 0; c < widths[l]; ++c) layer.weights(r, c) = 0.3 * rng.normal();
            layer.biases(r) = 0.05 * rng.normal();
        }
        layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(layers));
}

Eigen::VectorXd bench_point(int d) {
    Rng rng(7);
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.normal();
    return x;
}

void BM_explain(benchmark::State& state, Method method) {
    const int d = static_cast<int>(state.range(0));
    const MlpModel model = bench_mlp(d);
    const Eigen::VectorXd x = bench_point(d);
    ExplainerConfig cfg;
    cfg.smoothgrad.samples = 200;
    cfg.lime.samples = 500;
    cfg.kernelshap.samples = 256;
    cfg.kernelshap.background = Eigen::VectorXd::Zero(d);

    std::uint64_t seed = 0;
    for (auto _ : state) {
        const Explanation e = explain(method, model, x, cfg, seed++);
        benchmark::DoNotOptimize(e.importances.sum());
    }
}

void BM_prediction_gap(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const MlpModel model = bench_mlp(d);
    const Eigen::VectorXd x = bench_point(d);
    const Eigen::VectorXd w = bench_point(d);
    MetricConfig cfg;
    cfg.k = std::min(5, d);
    cfg.m_pred_gap = 200;

    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(prediction_gap(model, x, w, cfg, seed++));
    }
}

} // namespace

BENCHMARK_CAPTURE(BM_explain, vanillagrad, xaudit::Method::kVanillaGrad)->Arg(8)->Arg(24);
BENCHMARK_CAPTURE(BM_explain, smoothgrad, xaudit::Method::kSmoothGrad)->Arg(8)->Arg(24);
BENCHMARK_CAPTURE(BM_explain, intgrad, xaudit::Method::kIntGrad)->Arg(8)->Arg(24);
BENCHMARK_CAPTURE(BM_explain, lime, xaudit::Method::kLime)->Arg(8)->Arg(24);
BENCHMARK_CAPTURE(BM_explain, kernelshap, xaudit::Method::kKernelShap)->Arg(8)->Arg(24);
BENCHMARK(BM_prediction_gap)->Arg(8)->Arg(24);
