// Serial reference vs OpenMP kernels on a fixed synthetic workload.
#include "ecad/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ecad;

namespace {

constexpr std::size_t kTimes = 2000;
constexpr std::size_t kSensors = 10;
constexpr std::size_t kDim = 25;
constexpr std::size_t kModels = 25;

struct Workload {
    FeatureMatrix data;
    kernels::BagRows bags;
    std::vector<RegressionBackendSpec> specs;
    std::vector<FittedModel> models;
    Eigen::MatrixXd predictions;
    ModelSets loo_sets;   // per row: models whose bag misses its time
    ModelSets time_sets;  // per training time, the LOO predictor a test score ranks over
    Eigen::MatrixXd test_predictions;
};

const Workload& workload() {
    static const Workload w = [] {
        Workload w;
        std::mt19937_64 gen(1);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<FeatureRow> rows;
        for (std::size_t t = 0; t < kTimes; ++t)
            for (std::size_t k = 0; k < kSensors; ++k) {
                FeatureRow r{t, k, std::vector<double>(kDim), 0.0};
                for (auto& v : r.x) v = g(gen);
                r.y = r.x[0] - 0.5 * r.x[1] + g(gen);
                rows.push_back(std::move(r));
            }
        w.data = stack_features(rows);

        std::uniform_int_distribution<std::size_t> pick(0, kTimes - 1);
        std::vector<std::vector<bool>> in_bag(kModels, std::vector<bool>(kTimes, false));
        for (std::size_t b = 0; b < kModels; ++b) {
            std::vector<std::size_t> bag;
            for (std::size_t i = 0; i < kTimes; ++i) {
                const std::size_t t = pick(gen);
                in_bag[b][t] = true;
                for (std::size_t k = 0; k < kSensors; ++k) bag.push_back(t * kSensors + k);
            }
            w.bags.push_back(std::move(bag));
        }
        w.specs.assign(kModels, RegressionBackendSpec::ridge(1.0));
        w.models = kernels::serial::fit_models(w.data, w.bags, w.specs);
        w.predictions = kernels::serial::prediction_matrix(w.models, w.data.x);
        for (std::size_t r = 0; r < w.data.size(); ++r) {
            std::vector<std::uint32_t> s;
            for (std::uint32_t b = 0; b < kModels; ++b)
                if (!in_bag[b][w.data.time[r]]) s.push_back(b);
            if (s.empty()) s.push_back(0);
            w.loo_sets.push_back(std::move(s));
        }
        for (std::size_t t = 0; t < kTimes; ++t) w.time_sets.push_back(w.loo_sets[t * kSensors]);
        w.test_predictions = w.predictions.leftCols(200);
        return w;
    }();
    return w;
}

template <bool Parallel>
void BM_FitModels(benchmark::State& state) {
    const auto& w = workload();
    for (auto _ : state) {
        auto m = Parallel ? kernels::parallel::fit_models(w.data, w.bags, w.specs)
                          : kernels::serial::fit_models(w.data, w.bags, w.specs);
        benchmark::DoNotOptimize(m);
    }
}

template <bool Parallel>
void BM_PredictionMatrix(benchmark::State& state) {
    const auto& w = workload();
    for (auto _ : state) {
        auto p = Parallel ? kernels::parallel::prediction_matrix(w.models, w.data.x)
                          : kernels::serial::prediction_matrix(w.models, w.data.x);
        benchmark::DoNotOptimize(p.data());
    }
}

template <bool Parallel>
void BM_LooAggregate(benchmark::State& state) {
    const auto& w = workload();
    const auto phi = Aggregator::median();
    for (auto _ : state) {
        auto v = Parallel ? kernels::parallel::loo_aggregate(w.predictions, w.loo_sets, phi)
                          : kernels::serial::loo_aggregate(w.predictions, w.loo_sets, phi);
        benchmark::DoNotOptimize(v.data());
    }
}

template <bool Parallel>
void BM_LooQuantile(benchmark::State& state) {
    const auto& w = workload();
    const auto phi = Aggregator::mean();
    for (auto _ : state) {
        auto v = Parallel ? kernels::parallel::loo_quantile(w.test_predictions, w.time_sets, phi, 0.95)
                          : kernels::serial::loo_quantile(w.test_predictions, w.time_sets, phi, 0.95);
        benchmark::DoNotOptimize(v.data());
    }
}

}  // namespace

BENCHMARK(BM_FitModels<false>)->Name("fit_models/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitModels<true>)->Name("fit_models/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictionMatrix<false>)->Name("prediction_matrix/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictionMatrix<true>)->Name("prediction_matrix/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LooAggregate<false>)->Name("loo_aggregate/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LooAggregate<true>)->Name("loo_aggregate/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LooQuantile<false>)->Name("loo_quantile/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LooQuantile<true>)->Name("loo_quantile/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
