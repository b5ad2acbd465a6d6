#include <benchmark/benchmark.h>

#include "floc/nn.hpp"
#include "floc/simulator.hpp"

namespace {

void BM_Forward(benchmark::State& state) {
  const auto params = floc::nn::init_params(4, floc::nn::kDefaultHidden, 4, 7);
  const floc::FeatureVector x{0.3, -1.2, 0.5, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(floc::nn::forward(params, x));
}
BENCHMARK(BM_Forward);

void BM_LossAndGrads(benchmark::State& state) {
  const auto params = floc::nn::init_params(4, floc::nn::kDefaultHidden, 4, 7);
  const auto data = floc::simulator::gen_labeled(static_cast<std::size_t>(state.range(0)), 3);
  const auto stats = floc::dataset::fit_norm(data);
  std::vector<floc::FeatureVector> xs;
  for (const auto& s : data.samples) xs.push_back(floc::dataset::apply_norm(stats, s));
  for (auto _ : state) benchmark::DoNotOptimize(floc::nn::loss_and_grads(params, {xs, data.labels}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGrads)->Arg(32)->Arg(256);

void BM_TrainTable3Config(benchmark::State& state) {
  const auto data = floc::simulator::gen_labeled(24, 11);
  floc::nn::TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(floc::nn::train(data, cfg));
}
BENCHMARK(BM_TrainTable3Config)->Unit(benchmark::kMillisecond);

}  // namespace
