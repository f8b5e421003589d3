#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "spcgen/table_io.hpp"

using namespace spcgen;

static void BM_ParseLatex(benchmark::State& state) {
  const auto text = render_latex_table(bench::catalog(static_cast<std::size_t>(state.range(0)), 6));
  for (auto _ : state) benchmark::DoNotOptimize(parse_latex_table(text, Sector::kFN, CatalogSource::kGenerated));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_ParseLatex)->Arg(20)->Arg(200);

static void BM_XlsxRoundTrip(benchmark::State& state) {
  const auto c = bench::catalog(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(import_xlsx_bytes(export_xlsx_bytes(c)));
}
BENCHMARK(BM_XlsxRoundTrip)->Arg(20)->Arg(200);
