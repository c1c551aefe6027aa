#include <benchmark/benchmark.h>

#include "lbseg/experiment.hpp"
#include "lbseg/ops.hpp"

using namespace lbseg;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  Tensor x = random_tensor({c, hw, hw}, 1);
  Tensor w = random_tensor({c, c, 3, 3}, 2);
  Tensor b = random_tensor({c}, 3);
  for (auto _ : state) {
    Graph g;
    Var y = ops::conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 1, 1);
    g.backward(ops::sum(y));
    benchmark::DoNotOptimize(w.grad);
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({16, 32})->Args({32, 16})->Args({64, 16});

void BM_FilterAndUpsample(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Tensor s = random_tensor({k, 16, 16}, 4);
  Tensor c = random_tensor({k}, 5);
  for (auto _ : state) {
    Graph g;
    benchmark::DoNotOptimize(filter_and_upsample(g.constant(c), g.constant(s), 64, 64, {}).value());
  }
}
BENCHMARK(BM_FilterAndUpsample)->Arg(6)->Arg(60);

void BM_TrainEpoch(benchmark::State& state) {
  SyntheticConfig sc;
  sc.n_train = 8;
  sc.n_val = 2;
  const auto ds = generate_synthetic(sc);
  TrainConfig tc;
  tc.mode = static_cast<TrainMode>(state.range(0));
  tc.epochs = 1;
  tc.learning_rate = 1e-3;
  tc.momentum = 0.9;
  for (auto _ : state) {
    Model m(ModelConfig{}, ModelDims::of(ds), mode_has_head(tc.mode), 1);
    benchmark::DoNotOptimize(train(m, ds, tc).log);
  }
}
BENCHMARK(BM_TrainEpoch)
    ->Arg(static_cast<int>(TrainMode::kBaseline))
    ->Arg(static_cast<int>(TrainMode::kFiltered))
    ->Unit(benchmark::kMillisecond);

void BM_NoisyGridCell(benchmark::State& state) {
  SyntheticConfig sc;
  sc.n_train = 1;
  sc.n_val = 20;
  const auto ds = generate_synthetic(sc);
  Model m(ModelConfig{}, ModelDims::of(ds), false, 1);
  std::vector<Inference> inferred;
  for (const auto& s : ds.val) inferred.push_back(infer(m, s));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_grid_cell(inferred, ds.val, ds.k, 1.5, 2.5, 7, kOracleSaturation, {}));
  }
}
BENCHMARK(BM_NoisyGridCell)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
