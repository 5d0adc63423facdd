// Serial reference kernels against their OpenMP versions.
//
//   bench_kernels --benchmark_filter=Pairwise
//   GRAPHTSNE_THREADS=4 bench_kernels

#include <cstdlib>
#include <vector>

#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "graphtsne/kernels.hpp"

using namespace gtsne;

namespace {

template <bool Parallel>
void PairwiseSqEuclidean(benchmark::State& state) {
  const Matrix x = fixtures::random_matrix(state.range(0), 64, 1);
  for (auto _ : state) {
    Matrix d = Parallel ? kernels::pairwise_sq_euclidean(x) : kernels::serial::pairwise_sq_euclidean(x);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <bool Parallel>
void TsneGradient(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const Matrix y = fixtures::random_matrix(n, 2, 2, -5, 5);
  Matrix p = fixtures::random_matrix(n, n, 3, 0, 1);
  double total = 0;
  for (double v : p.values()) total += v;
  for (double& v : p.values()) v /= total;
  Matrix w, grad;
  for (auto _ : state) {
    if constexpr (Parallel) {
      const double z = kernels::student_t_weights(y, w);
      kernels::tsne_gradient(p, w, z, y, grad);
    } else {
      const double z = kernels::serial::student_t_weights(y, w);
      kernels::serial::tsne_gradient(p, w, z, y, grad);
    }
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void Linear(benchmark::State& state) {
  const std::size_t rows = state.range(0);
  const Matrix a = fixtures::random_matrix(rows, 128, 4);
  const Matrix w = fixtures::random_matrix(128, 128, 5);
  const Matrix bias = fixtures::random_matrix(1, 128, 6);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::linear(a, rows, w, bias.values(), out);
    else
      kernels::serial::linear(a, rows, w, bias.values(), out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * rows * 128 * 128);
}

template <bool Parallel>
void BfsAllPairs(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const Graph g(n, fixtures::random_edges(n, 4.0 / n, 7));
  std::vector<NodeId> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<NodeId>(i);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::bfs_distances(g.offsets(), g.targets(), all, all, -1, out);
    else
      kernels::serial::bfs_distances(g.offsets(), g.targets(), all, all, -1, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void KnnIndices(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const Matrix x = fixtures::random_matrix(n, 32, 8);
  std::vector<NodeId> out(n * 10);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::knn_indices(x, 10, out);
    else
      kernels::serial::knn_indices(x, 10, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(PairwiseSqEuclidean<false>)->Name("PairwiseSqEuclidean/serial")->Arg(500)->Arg(2000);
BENCHMARK(PairwiseSqEuclidean<true>)->Name("PairwiseSqEuclidean/omp")->Arg(500)->Arg(2000);
BENCHMARK(TsneGradient<false>)->Name("TsneGradient/serial")->Arg(500)->Arg(2708);
BENCHMARK(TsneGradient<true>)->Name("TsneGradient/omp")->Arg(500)->Arg(2708);
BENCHMARK(Linear<false>)->Name("Linear/serial")->Arg(2708);
BENCHMARK(Linear<true>)->Name("Linear/omp")->Arg(2708);
BENCHMARK(BfsAllPairs<false>)->Name("BfsAllPairs/serial")->Arg(1000)->Arg(2708);
BENCHMARK(BfsAllPairs<true>)->Name("BfsAllPairs/omp")->Arg(1000)->Arg(2708);
BENCHMARK(KnnIndices<false>)->Name("KnnIndices/serial")->Arg(1000);
BENCHMARK(KnnIndices<true>)->Name("KnnIndices/omp")->Arg(1000);

int main(int argc, char** argv) {
  if (const char* t = std::getenv("GRAPHTSNE_THREADS")) kernels::set_thread_count(std::atoi(t));
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
