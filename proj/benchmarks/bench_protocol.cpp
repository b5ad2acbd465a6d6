#include <benchmark/benchmark.h>

#include "floc/protocol.hpp"

namespace {

const floc::SensorFrame kFrame{"TANK-A", 1, 1602998400, {29.5, 6.9, 1.7, 10.0, std::nullopt}};

void BM_EncodeFrame(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(floc::protocol::encode_frame(kFrame));
}
BENCHMARK(BM_EncodeFrame);

void BM_ParseFrame(benchmark::State& state) {
  const auto line = floc::protocol::encode_frame(kFrame);
  for (auto _ : state) benchmark::DoNotOptimize(floc::protocol::parse_frame(line));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(line.size()));
}
BENCHMARK(BM_ParseFrame);

void BM_Checksum(benchmark::State& state) {
  const std::string payload(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) benchmark::DoNotOptimize(floc::protocol::checksum(payload));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Checksum)->Arg(64)->Arg(4096);

}  // namespace
