#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "bench_common.hpp"
#include "spcgen/matching.hpp"
#include "spcgen/scoring.hpp"

using namespace spcgen;

static void BM_OptimalAssignment(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> m(n * (n + n / 5));
  for (auto& v : m) v = unit(rng);
  for (auto _ : state) benchmark::DoNotOptimize(optimal_assignment(n, n + n / 5, m));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OptimalAssignment)->RangeMultiplier(2)->Range(8, 256)->Complexity();

static void BM_LexicalMatrix(benchmark::State& state) {
  const auto gn = bench::catalog(static_cast<std::size_t>(state.range(0)), 2);
  const auto gt = bench::catalog(static_cast<std::size_t>(state.range(0) * 6 / 5), 3);
  LexicalScorer lex;
  for (auto _ : state) benchmark::DoNotOptimize(build_matrix(gn, gt, lex));
}
BENCHMARK(BM_LexicalMatrix)->Arg(50)->Arg(200);

static void BM_EvaluateTables(benchmark::State& state) {
  const auto gn = bench::catalog(50, 4);
  const auto gt = bench::catalog(60, 5);
  LexicalScorer lex;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_tables(gn, gt, lex));
}
BENCHMARK(BM_EvaluateTables);
