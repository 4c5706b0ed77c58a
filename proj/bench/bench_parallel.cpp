// Serial reference path against the OpenMP path for the data-parallel kernels.
// Run with CONJPT_THREADS unset to use every core.

#include <benchmark/benchmark.h>

#include "conjpt/catalog.hpp"
#include "conjpt/conjugate.hpp"
#include "conjpt/cov.hpp"
#include "conjpt/oracle.hpp"

using namespace conjpt;

namespace {

Execution policy(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

void BM_DetGridClosedForm(benchmark::State& state) {
  const CatalogEntry e = builtin_problem("trig2d");
  ConjugateOptions o;
  o.method = DetMethod::closed_form;
  o.cov = e.cov;
  o.execution = policy(state);
  for (auto _ : state) benchmark::DoNotOptimize(det_grid(e.spec, ScanBox::cube(2, 3.0), 100, o));
  label(state);
}

void BM_ScanPontryagin(benchmark::State& state) {
  const CatalogEntry e = builtin_problem("trig2d");
  ConjugateOptions o;
  o.execution = policy(state);
  for (auto _ : state) benchmark::DoNotOptimize(scan(e.spec, ScanBox::cube(2, 3.0), 16, o));
  label(state);
}

void BM_OmegaMultistart(benchmark::State& state) {
  const CatalogEntry e = builtin_problem("trig2d");
  OmegaOptions o;
  o.execution = policy(state);
  for (auto _ : state) benchmark::DoNotOptimize(omega_solve(*e.cov, o));
  label(state);
}

void BM_Genericity(benchmark::State& state) {
  const CatalogEntry e = builtin_problem("degenerate1d");
  GenericityOptions g;
  g.trials = 100;
  g.execution = policy(state);
  for (auto _ : state) benchmark::DoNotOptimize(genericity_experiment(*e.cov, g));
  label(state);
}

void BM_OracleStencil(benchmark::State& state) {
  const CatalogEntry e = builtin_problem("bench1d");
  OracleOptions o;
  o.execution = policy(state);
  const Vec zbar = Vec::Zero(1), v = Vec::Ones(1);
  for (auto _ : state) benchmark::DoNotOptimize(g_derivatives(e.spec, zbar, v, o));
  label(state);
}

}  // namespace

BENCHMARK(BM_DetGridClosedForm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScanPontryagin)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OmegaMultistart)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Genericity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleStencil)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
