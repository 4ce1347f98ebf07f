#include <benchmark/benchmark.h>

#include <random>

#include "svtp/fisher.hpp"
#include "svtp/kernel.hpp"
#include "svtp/parallel.hpp"
#include "svtp/stdist.hpp"

namespace {

using namespace svtp;

Matrix points(Eigen::Index n, Eigen::Index d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = u(rng);
  return m;
}

DiagStudentT make_q(Eigen::Index M) {
  DiagStudentT q;
  q.nu_tilde = 5.0;
  q.m = Vector::Zero(M);
  q.sigma = Vector::LinSpaced(M, 0.5, 2.0);
  return q;
}

parallel::Exec exec_of(const benchmark::State& s) {
  return s.range(1) == 0 ? parallel::Exec::Serial : parallel::Exec::Parallel;
}

void BM_Gram(benchmark::State& state) {
  const Matrix a = points(state.range(0), 4, 1), b = points(256, 4, 2);
  KernelParams p;
  for (auto _ : state) {
    Matrix k = state.range(1) < 0 ? gram_reference(p, a, b) : gram(p, a, b, exec_of(state));
    benchmark::DoNotOptimize(k.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 256);
}
// Second argument: -1 = single-threaded reference, 0 = serial chunked, 1 = OpenMP.
BENCHMARK(BM_Gram)->ArgsProduct({{1024, 8192}, {-1, 0, 1}});

void BM_SampleDiag(benchmark::State& state) {
  const DiagStudentT q = make_q(32);
  for (auto _ : state) {
    auto batch = sample_diag(q, static_cast<std::size_t>(state.range(0)), 7, exec_of(state));
    benchmark::DoNotOptimize(batch.u.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleDiag)->ArgsProduct({{10000, 100000}, {0, 1}});

void BM_MonteCarloFisher(benchmark::State& state) {
  const DiagStudentT q = make_q(state.range(0));
  for (auto _ : state) {
    auto f = fisher::mc_fisher_oracle(q, 100000, 3, exec_of(state));
    benchmark::DoNotOptimize(f.mean.data());
  }
}
BENCHMARK(BM_MonteCarloFisher)->ArgsProduct({{2, 5}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_AssembleAndSolve(benchmark::State& state) {
  const Eigen::Index M = state.range(0);
  const DiagStudentT q = make_q(M);
  const Vector g = Vector::Ones(2 * M + 1);
  for (auto _ : state) {
    auto b = fisher::assemble(q.nu_tilde, static_cast<int>(M), q.sigma);
    Vector d = fisher::natural_direction(b, g);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(BM_AssembleAndSolve)->Arg(16)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
