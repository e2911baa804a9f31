#include <cmath>

#include <benchmark/benchmark.h>

#include "ssmlab/numerics.hpp"
#include "ssmlab/rng.hpp"
#include "ssmlab/sparse.hpp"
#include "ssmlab/ssm.hpp"

namespace {

using namespace ssmlab;

constexpr std::size_t kInputDim = 16;

struct Fixture {
  SsmParams p;
  Vec g, h, x, w;
  ActiveSet act;

  Fixture(std::size_t d, std::size_t k) {
    CounterRng rng(d * 7919 + k, Stream::Sampling, 0);
    Mat a(d, d), b(d, kInputDim);
    for (double& v : a.data()) v = rng.normal() / std::sqrt(double(d));
    for (double& v : b.data()) v = rng.normal();
    p = SsmParams{a, b, Mat::identity(d), Mat(d, d), Mat::identity(d)};
    g.assign(d, 0.0);
    for (std::size_t i = 0; i < k; ++i) g[(i * d) / k] = 0.5;
    h.resize(d);
    x.resize(kInputDim);
    w.assign(d, 0.0);
    for (double& v : h) v = rng.normal();
    for (double& v : x) v = rng.normal();
    act = active_set(g, kDefaultGateThreshold);
  }
};

void BM_Dense(benchmark::State& st) {
  const Fixture f(st.range(0), st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(gated_update(f.p, f.g, UpdateForm::Retentive, f.h, f.x, f.w));
}

void BM_Rows(benchmark::State& st) {
  const Fixture f(st.range(0), st.range(1));
  Vec out(f.h.size());
  for (auto _ : st) {
    sparse_step_rows_into(out, f.p, f.g, f.act, f.h, f.x, f.w);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_Block(benchmark::State& st) {
  const Fixture f(st.range(0), st.range(1));
  const BlockKernel kernel(f.p);
  Vec out(f.h.size()), scratch(f.h.size());
  for (auto _ : st) {
    kernel.step_into(out, scratch, f.g, f.act, f.act, f.h, f.x, f.w);
    benchmark::DoNotOptimize(out.data());
  }
}

void Args(benchmark::internal::Benchmark* b) {
  for (long d : {128, 512})
    for (long k = 32; k <= d; k *= 2) b->Args({d, k});
}

}  // namespace

BENCHMARK(BM_Dense)->Apply(Args);
BENCHMARK(BM_Rows)->Apply(Args);
BENCHMARK(BM_Block)->Apply(Args);
BENCHMARK_MAIN();
