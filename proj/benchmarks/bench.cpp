// Microbenchmarks for the hot paths of the solver: the dense product, the
// ridge subproblem solves, one full solver cycle, and the spectral
// initialization.

#include <random>

#include <benchmark/benchmark.h>

#include <relunmd/linalg.hpp>
#include <relunmd/matrix.hpp>
#include <relunmd/solver.hpp>

using relunmd::Index;
using relunmd::Matrix;

namespace {

Matrix gaussian(Index rows, Index cols, unsigned long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  }
  return m;
}

Matrix sparse_nonneg(Index rows, Index cols, unsigned long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double coin = uniform(rng);
      m(i, j) = coin < 0.6 ? 0.0 : uniform(rng);
    }
  }
  return m;
}

void bm_matmul(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix a = gaussian(n, n, 1);
  const Matrix b = gaussian(n, n, 2);
  for (auto _ : state) {
    Matrix c = relunmd::matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_matmul)->Arg(64)->Arg(256);

void bm_ridge_solve(benchmark::State& state) {
  const Index rank = state.range(0);
  const Matrix w = gaussian(512, 256, 3);
  const Matrix v = gaussian(rank, 256, 4);
  for (auto _ : state) {
    Matrix u = relunmd::ridge_solve_right(w, v, 1e-4);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_ridge_solve)->Arg(8)->Arg(32);

void bm_solver_step(benchmark::State& state) {
  const Index rank = state.range(0);
  const Matrix m = sparse_nonneg(512, 256, 5);
  relunmd::NmdParams params;
  params.rank = rank;
  relunmd::NmdState s = relunmd::initialize(m, params);
  for (auto _ : state) {
    relunmd::step(s, m, params);
    benchmark::DoNotOptimize(s.x.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_solver_step)->Arg(8)->Arg(32);

void bm_truncated_svd(benchmark::State& state) {
  const Index rank = state.range(0);
  const Matrix m = sparse_nonneg(512, 256, 6);
  for (auto _ : state) {
    relunmd::SvdFactors f = relunmd::truncated_svd(m, rank);
    benchmark::DoNotOptimize(f.u.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_truncated_svd)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
