// Compares the serial reference path (workers = 1) against the OpenMP path
// (workers = 0, i.e. the library's default thread count) on the audit's
// trial loop, which dominates end-to-end runtime.  The two paths produce
// bit-identical results by construction — the unit tests pin that — so
// these benchmarks measure speed only.
//
// Run manually:  ./lidp_bench  [--benchmark_filter=...]
#include <benchmark/benchmark.h>

#include <cstdint>
#include <memory>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "lidp/harness.hpp"

namespace {

using namespace lidp;

AuditConfig bench_config(std::size_t n, std::size_t K, std::size_t d,
                         int workers) {
  AuditConfig cfg;
  cfg.n = n;
  cfg.K = K;
  cfg.m = K;
  cfg.d = d;
  cfg.claimed = {1.0, 1e-5};
  cfg.beta = 0.05;
  cfg.ci_method = CiMethod::kWilson;
  cfg.ci_order = 2;
  cfg.neighborhood = Neighborhood::kReplaceOne;  // one mechanism call per trial
  cfg.tau = 1.0;
  cfg.seed = 42;
  cfg.workers = workers;
  cfg.mechanism = std::make_shared<GaussianSumMechanism>(d, 1.0);
  return cfg;
}

void run_audit(benchmark::State& state, int workers) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto K = static_cast<std::size_t>(state.range(1));
  const auto d = static_cast<std::size_t>(state.range(2));
  const AuditConfig cfg = bench_config(n, K, d, workers);
  for (auto _ : state) {
    const AuditReport rep = audit(cfg);
    benchmark::DoNotOptimize(rep.estimate.eps_hat);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}

void AuditTrialsSerialReference(benchmark::State& state) {
  run_audit(state, /*workers=*/1);
}

void AuditTrialsOpenMp(benchmark::State& state) {
  run_audit(state, /*workers=*/0);
}

// (n, K, d): a small audit dominated by per-trial canary sampling and a
// larger one where the mechanism's vector sums matter too.
BENCHMARK(AuditTrialsSerialReference)
    ->Args({256, 16, 1000})
    ->Args({512, 32, 2000})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(AuditTrialsOpenMp)
    ->Args({256, 16, 1000})
    ->Args({512, 32, 2000})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
#endif
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
