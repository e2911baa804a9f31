#include <cmath>

#include <gtest/gtest.h>

#include "ssmlab/error.hpp"
#include "ssmlab/sparse.hpp"
#include "test_util.hpp"

namespace ssmlab {
namespace {

using testing::make_params;
using testing::random_gate;
using testing::random_mat;
using testing::random_vec;

// Gate vector with roughly `frac` of the entries active, the rest well below τ.
Vec sparse_gates(std::size_t d, double frac, std::uint64_t seed) {
  CounterRng rng(seed, Stream::Sampling, 5);
  Vec g(d);
  for (double& v : g) v = rng.uniform() < frac ? rng.uniform(0.01, 1.0) : rng.uniform(0.0, 5e-4);
  return g;
}

TEST(ActiveSet, HandExamples) {
  EXPECT_EQ(active_set(Vec{0.9, 0.0001, 0.5}, 0.01).indices, (std::vector<std::uint32_t>{0, 2}));
  EXPECT_TRUE(active_set(Vec{0.2, 0.3}, 0.5).indices.empty());
  for (double tau : {0.01, 0.5, 0.99})
    EXPECT_EQ(active_set(Vec{1, 0, 0, 1, 1}, tau).indices, (std::vector<std::uint32_t>{0, 3, 4}));
}

TEST(ActiveSet, ThresholdBounds) {
  for (double tau : {0.0, 1.0, -0.1}) {
    try {
      active_set(Vec{0.5}, tau);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::OutOfRange);
    }
  }
}

TEST(ActiveSet, MembershipMatchesThreshold) {
  const Vec g = sparse_gates(100, 0.3, 1);
  const ActiveSet act = active_set(g, 1e-3);
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool in = k < act.size() && act.indices[k] == i;
    EXPECT_EQ(in, g[i] >= 1e-3);
    if (in) ++k;
  }
}

TEST(SparseRows, FullSetIsBitwiseGatedUpdate) {
  const SsmParams p = make_params(random_mat(16, 16, 1, 0.25), random_mat(16, 4, 2));
  const Vec g = random_vec(16, 3);
  Vec gate(16);
  for (std::size_t i = 0; i < 16; ++i) gate[i] = 1.0 / (1.0 + std::exp(-g[i]));
  const Vec h = random_vec(16, 4), x = random_vec(4, 5), w = random_vec(16, 6, 0.1);
  EXPECT_EQ(sparse_step_rows(p, gate, full_active_set(16), h, x, w),
            gated_update(p, gate, UpdateForm::Retentive, h, x, w));
}

TEST(SparseRows, EmptySetKeepsState) {
  const SsmParams p = make_params(random_mat(8, 8, 1), random_mat(8, 2, 2));
  const Vec h = random_vec(8, 3);
  EXPECT_EQ(sparse_step_rows(p, Vec(8, 0.0), ActiveSet{}, h, random_vec(2, 4), {}), h);
}

TEST(SparseRows, BitwiseEqualsThresholdedDenseOnRandomConfigs) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t d = 8 + seed % 40, m = 1 + seed % 5;
    const SsmParams p = make_params(random_mat(d, d, seed, 1.0 / std::sqrt(double(d))), random_mat(d, m, seed + 1));
    const Vec g = sparse_gates(d, 0.25, seed);
    const ActiveSet act = active_set(g, kDefaultGateThreshold);
    const Vec h = random_vec(d, seed + 2), x = random_vec(m, seed + 3);
    const Vec w = seed % 2 ? random_vec(d, seed + 4, 0.05) : Vec{};
    const Vec dense = gated_update(p, threshold_gates(g, kDefaultGateThreshold), UpdateForm::Retentive, h, x, w);
    const Vec rows = sparse_step_rows(p, g, act, h, x, w);
    for (std::size_t i = 0; i < d; ++i) ASSERT_EQ(rows[i], dense[i]) << "seed " << seed << " i " << i;
  }
}

TEST(SparseRows, DimensionMismatch) {
  const SsmParams p = make_params(Mat::identity(3), Mat(3, 1));
  try {
    sparse_step_rows(p, Vec(3, 1.0), full_active_set(3), Vec(2), Vec{1.0}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(SparseBlock, DiagonalAIsExact) {
  Mat a(12, 12);
  for (std::size_t i = 0; i < 12; ++i) a(i, i) = 0.1 * double(i) - 0.5;
  const SsmParams p = make_params(a, random_mat(12, 3, 1));
  const Vec g = sparse_gates(12, 0.4, 2), g_prev = sparse_gates(12, 0.4, 3);
  const ActiveSet act = active_set(g, 1e-3), act_prev = active_set(g_prev, 1e-3);
  const Vec h = random_vec(12, 4), x = random_vec(3, 5);
  const BlockStep b = sparse_step_block(p, g, act_prev, act, h, x, {});
  EXPECT_EQ(b.h, sparse_step_rows(p, g, act, h, x, {}));
}

TEST(SparseBlock, AllActiveMatchesDense) {
  const SsmParams p = make_params(random_mat(10, 10, 1, 0.3), random_mat(10, 2, 2));
  const Vec g(10, 0.6), h = random_vec(10, 3), x = random_vec(2, 4);
  const BlockStep b = sparse_step_block(p, g, full_active_set(10), full_active_set(10), h, x, {});
  const Vec dense = gated_update(p, g, UpdateForm::Retentive, h, x, {});
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(b.h[i], dense[i], 1e-14);
  EXPECT_LE(b.error_bound, 1e-13);
}

TEST(SparseBlock, BoundDominatesDeviation) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t d = 32;
    const SsmParams p = make_params(random_mat(d, d, seed, 0.2), random_mat(d, 3, seed + 1));
    const Vec g = sparse_gates(d, 0.25, seed + 2), g_prev = sparse_gates(d, 0.25, seed + 3);
    const ActiveSet act = active_set(g, 1e-3), act_prev = active_set(g_prev, 1e-3);
    const Vec h = random_vec(d, seed + 4), x = random_vec(3, seed + 5);
    const BlockStep b = sparse_step_block(p, g, act_prev, act, h, x, {});
    const Vec exact = sparse_step_rows(p, g, act, h, x, {});
    ASSERT_EQ(b.row_bounds.size(), act.size());
    for (std::size_t k = 0; k < act.size(); ++k) {
      const std::size_t i = act.indices[k];
      EXPECT_LE(std::abs(b.h[i] - exact[i]), b.row_bounds[k]) << seed;
    }
    for (std::size_t i = 0; i < d; ++i)
      if (g[i] < 1e-3) EXPECT_EQ(b.h[i], exact[i]);
  }
}

TEST(SparseBlock, BoundHoldsAlongRollout) {
  const std::size_t d = 48;
  const SsmParams p = make_params(random_mat(d, d, 7, 0.15), random_mat(d, 4, 8));
  GateParams gp = random_gate(d, 4, 9, Activation::Sigmoid, GateMode::InputOnly, 3.0);
  for (double& b : gp.bias) b -= 4.0;
  const BlockKernel kernel(p);
  Vec h = random_vec(d, 10);
  ActiveSet prev = full_active_set(d);
  for (std::size_t t = 0; t < 100; ++t) {
    const Vec x = random_vec(4, 100 + t);
    const Vec g = gate_eval(gp, x, h);
    const ActiveSet act = active_set(g, 1e-3);
    const BlockStep b = kernel.step(g, prev, act, h, x, {});
    const Vec exact = sparse_step_rows(p, g, act, h, x, {});
    for (std::size_t k = 0; k < act.size(); ++k)
      ASSERT_LE(std::abs(b.h[act.indices[k]] - exact[act.indices[k]]), b.row_bounds[k]) << t;
    h = exact;
    prev = act;
  }
}

TEST(DeltaTrajectory, HandExamples) {
  const Vec h0{1, 2, 3, 4};
  DeltaTrajectory dt(h0, 1e-3);
  EXPECT_EQ(dt.steps(), 0u);
  EXPECT_EQ(dt.reconstruct(0), h0);
  EXPECT_EQ(dt.memory_footprint().bytes, 4 * sizeof(double));
  EXPECT_EQ(dt.memory_footprint().values, 4u);

  ActiveSet act;
  act.indices = {2};
  delta_append(dt, act, Vec{5.0});
  EXPECT_EQ(dt.reconstruct(1), (Vec{1, 2, 5, 4}));
  EXPECT_EQ(dt.reconstruct(0), h0);
  EXPECT_EQ(memory_footprint(dt).pairs, 1u);
  EXPECT_EQ(memory_footprint(dt).bytes, 12u + 32u);
}

TEST(DeltaTrajectory, Errors) {
  DeltaTrajectory dt(Vec(3), 1e-3);
  ActiveSet bad;
  bad.indices = {1, 5};
  try {
    dt.append(bad, Vec{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IndexOutOfRange);
  }
  ActiveSet unsorted;
  unsorted.indices = {2, 1};
  EXPECT_THROW(dt.append(unsorted, Vec{1, 2}), Error);
  try {
    dt.reconstruct(1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IndexOutOfRange);
  }
  EXPECT_EQ(dt.steps(), 0u);
}

TEST(DeltaTrajectory, CountAccounting) {
  const std::size_t d = 100, steps = 100;
  DeltaTrajectory dt(Vec(d), 1e-3);
  for (std::size_t t = 0; t < steps; ++t) {
    ActiveSet act;
    for (std::uint32_t i = 0; i < 10; ++i) act.indices.push_back((i * 10 + t) % d);
    std::sort(act.indices.begin(), act.indices.end());
    dt.append(act, Vec(10, double(t)));
  }
  const MemoryFootprint m = dt.memory_footprint();
  EXPECT_EQ(m.pairs, 1000u);
  EXPECT_EQ(m.values, 1000u + d);
  EXPECT_NEAR(double(m.values) / double(steps * d), 0.11, 1e-12);
  EXPECT_EQ(m.bytes, 1000u * 12u + d * 8u);
}

TEST(DeltaTrajectory, DenseGatesGiveNoSavings) {
  DeltaTrajectory dt(Vec(6), 1e-3);
  for (int t = 0; t < 9; ++t) dt.append(full_active_set(6), Vec(6, 1.0));
  EXPECT_EQ(dt.memory_footprint().pairs, 54u);
}

TEST(DeltaTrajectory, ReconstructsSparseRowsTrajectory) {
  const std::size_t d = 40;
  const SsmParams p = make_params(random_mat(d, d, 1, 0.15), random_mat(d, 3, 2));
  GateParams gp = random_gate(d, 3, 3, Activation::Sigmoid, GateMode::InputOnly, 3.0);
  for (double& b : gp.bias) b -= 5.0;
  const Mat inputs = random_mat(80, 3, 4);
  const Vec h0 = random_vec(d, 5);
  const SparseRollout r = sparse_rollout(p, gp, inputs, h0);

  Vec h = h0;
  std::size_t total = 0, prev_values = d;
  for (std::size_t t = 0; t < 80; ++t) {
    const Vec g = gate_eval(gp, inputs.row(t), h);
    const ActiveSet act = active_set(g, kDefaultGateThreshold);
    total += act.size();
    h = sparse_step_rows(p, g, act, h, inputs.row(t), {});
    ASSERT_EQ(r.deltas.reconstruct(t + 1), h);
    for (std::size_t i = 0; i < d; ++i) ASSERT_EQ(r.states(t, i), h[i]);
  }
  const MemoryFootprint m = r.deltas.memory_footprint();
  EXPECT_EQ(m.values, total + d);
  EXPECT_EQ(r.active_total, total);
  EXPECT_GE(m.values, prev_values);
  EXPECT_LT(total, 80 * d);
}

TEST(DeltaTrajectory, PairsTrackMeanActiveFraction) {
  const std::size_t d = 64, steps = 200;
  DeltaTrajectory dt(Vec(d), 1e-3);
  double frac_sum = 0.0;
  std::size_t last = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const Vec g = sparse_gates(d, 0.2, 1000 + t);
    const ActiveSet act = active_set(g, 1e-3);
    frac_sum += double(act.size()) / double(d);
    dt.append_state(act, g);
    EXPECT_GE(dt.memory_footprint().values, last);
    last = dt.memory_footprint().values;
  }
  EXPECT_NEAR(double(dt.memory_footprint().pairs), frac_sum / steps * steps * d, 1e-6);
}

TEST(BenchScaling, RejectsTooFewReps) {
  BenchOptions opt;
  opt.reps = 10;
  try {
    bench_scaling(opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidConfig);
  }
}

TEST(BenchScaling, SmallRunProducesRowsAndCsv) {
  BenchOptions opt;
  opt.dims = {32};
  opt.sparsity = {0.25, 1.0};
  opt.reps = 30;
  opt.min_rep_ns = 2000.0;
  const std::vector<BenchRow> rows = bench_scaling(opt);
  ASSERT_EQ(rows.size(), 5u);
  for (const BenchRow& r : rows) {
    EXPECT_GT(r.median_ns, 0.0);
    EXPECT_LE(r.p10_ns, r.median_ns);
    EXPECT_LE(r.median_ns, r.p90_ns);
  }
  const std::string csv = bench_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "kernel,d,k,reps,median_ns,p10_ns,p90_ns");
  EXPECT_TRUE(std::isfinite(loglog_slope(rows, "rows", 32)));
}

TEST(LogLogSlope, ExactPowerLaw) {
  std::vector<BenchRow> rows;
  for (std::size_t k : {4u, 8u, 16u, 32u}) rows.push_back({"block", 64, k, 30, 3.0 * double(k * k), 0, 0});
  EXPECT_NEAR(loglog_slope(rows, "block", 64), 2.0, 1e-12);
  EXPECT_THROW(loglog_slope(rows, "rows", 64), Error);
}

}  // namespace
}  // namespace ssmlab
