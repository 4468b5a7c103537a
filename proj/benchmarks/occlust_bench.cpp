#include "occlust/clustering.hpp"
#include "occlust/dimred.hpp"
#include "occlust/linalg.hpp"
#include "occlust/metrics.hpp"
#include "occlust/pipeline.hpp"
#include "occlust/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace occlust;

namespace {

pipeline::ModelData blobs(int n) {
  synthetic::BlobSpec spec;
  spec.n = n;
  spec.seed = 1;
  return pipeline::prepare_model("A", synthetic::make_blob_corpus(spec));
}

linalg::RealMatrix gaussian(int rows, int cols) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  linalg::RealMatrix m(rows, cols);
  for (auto& v : m.reshaped()) v = z(rng);
  return m;
}

}  // namespace

static void BM_PairwiseDistances(benchmark::State& state) {
  const auto x = gaussian(static_cast<int>(state.range(0)), 768);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::pairwise_distances(x));
}
BENCHMARK(BM_PairwiseDistances)->Arg(256)->Arg(1016)->Unit(benchmark::kMillisecond);

static void BM_SymEig(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto a = gaussian(n, n);
  const linalg::RealMatrix s = a + a.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(linalg::sym_eig(s, linalg::EigenOrder::largest, 50));
}
BENCHMARK(BM_SymEig)->Arg(256)->Arg(1016)->Unit(benchmark::kMillisecond);

static void BM_KMeans(benchmark::State& state) {
  const auto model = blobs(1016);
  for (auto _ : state) benchmark::DoNotOptimize(cluster::kmeans(model.x, 23, 7));
}
BENCHMARK(BM_KMeans)->Unit(benchmark::kMillisecond);

static void BM_Kmedoids(benchmark::State& state) {
  const auto model = blobs(1016);
  for (auto _ : state) benchmark::DoNotOptimize(cluster::kmedoids(model.distances, 23, 7));
}
BENCHMARK(BM_Kmedoids)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
  const auto model = blobs(1016);
  const auto pred = cluster::kmeans(model.x, 23, 7);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate(model.distances, pred.labels, model.truth.labels));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

static void BM_TsneGradient(benchmark::State& state) {
  const auto x = gaussian(static_cast<int>(state.range(0)), 20);
  const auto p = dimred::detail::joint_affinities(x, 30.0);
  const auto y = gaussian(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(dimred::detail::tsne_gradient(p, y));
}
BENCHMARK(BM_TsneGradient)->Arg(256)->Arg(1016)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
