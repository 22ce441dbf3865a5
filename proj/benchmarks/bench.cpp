#include <random>

#include <benchmark/benchmark.h>

#include "projdecomp/blocksum.hpp"
#include "projdecomp/fillmore.hpp"
#include "projdecomp/ii1.hpp"
#include "../tests/support/random_inputs.hpp"

using namespace projdecomp;

static void BM_FillmoreDecompose(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(42);
  const auto a = testing::random_psd(rng, n, n, static_cast<double>(n + 2));
  for (auto _ : state) benchmark::DoNotOptimize(fillmore_decompose(a));
}
BENCHMARK(BM_FillmoreDecompose)->Arg(4)->Arg(8)->Arg(12)->Arg(24);

static void BM_Eigh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(43);
  const auto a = testing::random_psd(rng, n, n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(eigh(a));
}
BENCHMARK(BM_Eigh)->Arg(8)->Arg(32)->Arg(64);

static void BM_BlockSchedule(benchmark::State& state) {
  ScheduleOptions opt;
  opt.build_certs = false;
  for (auto _ : state) benchmark::DoNotOptimize(scalar_block_schedule(Rational(1, 3), Rational(7, 5), 32, opt));
}
BENCHMARK(BM_BlockSchedule);

static void BM_BlockStreamAudit(benchmark::State& state) {
  const ScalarTailOperator a(HermitianMatrix::diagonal({0.5}), Rational(3, 2));
  const auto cert = finite_sum_decompose(a, 16);
  for (auto _ : state) benchmark::DoNotOptimize(audit_block_stream(cert, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_BlockStreamAudit)->Arg(4)->Arg(12);

static void BM_Lemma61Run(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(lemma61_run(Rational(1, 4), Rational(1, 2), Rational(1, 2), Rational(1, 2), 20));
}
BENCHMARK(BM_Lemma61Run);

static void BM_VerifyInvariants(benchmark::State& state) {
  const auto cert = lemma61_decompose(Rational(1, 4), Rational(1, 2), Rational(1, 2), Rational(1, 2), 20);
  for (auto _ : state) benchmark::DoNotOptimize(verify_invariants(cert));
}
BENCHMARK(BM_VerifyInvariants);
BENCHMARK_MAIN();
