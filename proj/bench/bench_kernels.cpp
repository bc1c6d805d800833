// Serial reference vs OpenMP kernels on a synthetic batch.

#include <benchmark/benchmark.h>

#include <numeric>

#include "faultpred/kernels.hpp"

namespace fp = faultpred;

namespace {

struct Fixture {
  fp::ModelParams params;
  std::vector<fp::Window> windows;
  std::vector<std::size_t> selection;

  explicit Fixture(std::size_t count) {
    fp::ModelDims dims;  // production defaults: D=4, H=64, T=48, head=32
    params = fp::init_params(dims, 1);
    fp::SeededRng rng(2);
    for (std::size_t i = 0; i < count; ++i) {
      fp::Window w;
      w.values = fp::Matrix(dims.window_len, dims.input_dim);
      for (auto& v : w.values.span()) v = rng.normal();
      w.label = static_cast<int>(i % 8 == 0);
      windows.push_back(std::move(w));
    }
    selection.resize(count);
    std::iota(selection.begin(), selection.end(), std::size_t{0});
  }
};

const fp::ClassWeights kWeights{4.0, 0.6};

void BM_BatchGradientsSerial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto g = fp::kernels::batch_gradients_serial(f.params, fp::Pooling::kAttention, f.windows,
                                                 f.selection, kWeights);
    benchmark::DoNotOptimize(g.loss_sum);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchGradientsParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto g = fp::kernels::batch_gradients_parallel(f.params, fp::Pooling::kAttention, f.windows,
                                                   f.selection, kWeights);
    benchmark::DoNotOptimize(g.loss_sum);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreSerial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto s = fp::kernels::score_windows_serial(f.params, fp::Pooling::kAttention, f.windows,
                                               f.selection);
    benchmark::DoNotOptimize(s.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto s = fp::kernels::score_windows_parallel(f.params, fp::Pooling::kAttention, f.windows,
                                                 f.selection);
    benchmark::DoNotOptimize(s.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BatchGradientsSerial)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientsParallel)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreSerial)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
