// Serial reference vs OpenMP kernels on a desk-scale batch.

#include <benchmark/benchmark.h>

#include <random>

#include "condlabel/embeddings.hpp"
#include "condlabel/kernels.hpp"

using namespace condlabel;

namespace {

struct Fixture {
  ModelParams params;
  std::vector<Vector> storage;
  kernels::FeatureList features;
  Matrix vectors;

  explicit Fixture(std::size_t batch) {
    ModelConfig c;  // f=16, hidden 64,64, k=8, d=20
    params = init_params(c, 1);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    storage.assign(batch, Vector(c.feature_dim));
    for (auto& v : storage) {
      for (double& x : v) x = n(rng);
    }
    for (const auto& v : storage) features.emplace_back(v);
    vectors = random_embeddings(1000, c.d, 3).vectors();
  }
};

void BM_RankBatch(benchmark::State& state, Execution exec) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::rank_batch(f.params, f.features, f.vectors, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SquaredDistances(benchmark::State& state, Execution exec) {
  Fixture f(1);
  auto big = random_embeddings(static_cast<std::size_t>(state.range(0)), 20, 4).vectors();
  auto a = forward_transform(f.params, f.features[0]);
  std::vector<double> out(big.rows);
  for (auto _ : state) {
    if (exec == Execution::kParallel) {
      kernels::squared_distances_parallel(a, big, out);
    } else {
      kernels::squared_distances_serial(a, big, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_RankBatch, serial, Execution::kSerial)->Arg(64)->Arg(512);
BENCHMARK_CAPTURE(BM_RankBatch, parallel, Execution::kParallel)->Arg(64)->Arg(512);
BENCHMARK_CAPTURE(BM_SquaredDistances, serial, Execution::kSerial)->Arg(10000)->Arg(100000);
BENCHMARK_CAPTURE(BM_SquaredDistances, parallel, Execution::kParallel)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
