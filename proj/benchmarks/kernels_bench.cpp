#include <benchmark/benchmark.h>

#include "coord/chol/kernels.hpp"

using namespace coord::chol;

namespace {

Tile spd_tile(std::size_t b) { return decompose(gen_spd(b, 1), b).at(0, 0); }

void BM_Potrf(benchmark::State& state) {
    const auto b = static_cast<std::size_t>(state.range(0));
    const Tile a = spd_tile(b);
    for (auto _ : state) benchmark::DoNotOptimize(potrf_tile(a));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b * b * b / 3));
}
BENCHMARK(BM_Potrf)->RangeMultiplier(2)->Range(16, 256);

void BM_Trsm(benchmark::State& state) {
    const auto b = static_cast<std::size_t>(state.range(0));
    const Tile l = potrf_tile(spd_tile(b));
    const Tile a = spd_tile(b);
    for (auto _ : state) benchmark::DoNotOptimize(trsm_tile(l, a));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b * b * b));
}
BENCHMARK(BM_Trsm)->RangeMultiplier(2)->Range(16, 256);

void BM_Update(benchmark::State& state) {
    const auto b = static_cast<std::size_t>(state.range(0));
    const Tile a = spd_tile(b);
    const Tile l = potrf_tile(a);
    for (auto _ : state) benchmark::DoNotOptimize(update_tile(a, l, l));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * b * b * b));
}
BENCHMARK(BM_Update)->RangeMultiplier(2)->Range(16, 256);

void BM_SerialTiled(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto b = static_cast<std::size_t>(state.range(1));
    const auto a = decompose(gen_spd(n, 2), b);
    for (auto _ : state) benchmark::DoNotOptimize(serial_tiled_cholesky(a));
}
BENCHMARK(BM_SerialTiled)->Args({512, 32})->Args({512, 64})->Args({512, 128})->Args({512, 512})->Unit(benchmark::kMillisecond);

}  // namespace
