#include <benchmark/benchmark.h>
#include <omp.h>

#include "latres/kernels.hpp"
#include "latres/rng.hpp"

namespace {

using namespace latres;

VectorSet random_set(std::size_t dim, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  VectorSet out(dim);
  out.reserve(n);
  Vec v(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : v) x = rng.normal();
    out.push_back(v);
  }
  return out;
}

Codebook random_codebook(std::size_t dim, std::uint64_t seed) {
  const VectorSet rows = random_set(dim, kCodebookSize, seed);
  return Codebook(dim, Vec(rows.values().begin(), rows.values().end()));
}

struct PlcBatch {
  PlcModel model;
  VectorSet windows;
  std::vector<CodeIndex> targets;
};

PlcBatch plc_batch(std::size_t hidden, std::size_t n) {
  PlcBatch b{PlcModel::initialized(16, hidden, 3), random_set(16 * kHistoryFrames, n, 4), {}};
  Rng rng(5);
  for (std::size_t i = 0; i < n; ++i) b.targets.push_back(static_cast<CodeIndex>(rng.below(256)));
  return b;
}

void BM_AssignSerial(benchmark::State& state) {
  const Codebook cb = random_codebook(16, 1);
  const VectorSet data = random_set(16, static_cast<std::size_t>(state.range(0)), 2);
  std::vector<CodeIndex> out(data.size());
  for (auto _ : state) {
    kernels::serial::assign_nearest(cb, data, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_AssignOmp(benchmark::State& state) {
  const Codebook cb = random_codebook(16, 1);
  const VectorSet data = random_set(16, static_cast<std::size_t>(state.range(0)), 2);
  std::vector<CodeIndex> out(data.size());
  for (auto _ : state) {
    kernels::omp::assign_nearest(cb, data, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_PlcBatchSerial(benchmark::State& state) {
  const PlcBatch b = plc_batch(static_cast<std::size_t>(state.range(0)), 128);
  for (auto _ : state) {
    auto r = kernels::serial::batch_loss_and_grad(b.model, b.windows, b.targets);
    benchmark::DoNotOptimize(r.loss_sum);
  }
  state.SetItemsProcessed(state.iterations() * 128);
}

void BM_PlcBatchOmp(benchmark::State& state) {
  const PlcBatch b = plc_batch(static_cast<std::size_t>(state.range(0)), 128);
  for (auto _ : state) {
    auto r = kernels::omp::batch_loss_and_grad(b.model, b.windows, b.targets);
    benchmark::DoNotOptimize(r.loss_sum);
  }
  state.SetItemsProcessed(state.iterations() * 128);
  state.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_AssignSerial)->Arg(4096)->Arg(65536);
BENCHMARK(BM_AssignOmp)->Arg(4096)->Arg(65536);
BENCHMARK(BM_PlcBatchSerial)->Arg(64)->Arg(256);
BENCHMARK(BM_PlcBatchOmp)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
