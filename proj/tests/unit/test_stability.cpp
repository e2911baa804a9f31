#include <cmath>

#include <gtest/gtest.h>

#include "ssmlab/error.hpp"
#include "ssmlab/stability.hpp"
#include "test_util.hpp"

namespace ssmlab {
namespace {

using testing::make_params;
using testing::random_gate;
using testing::random_mat;
using testing::random_vec;

Mat scaled_to_norm(Mat a, double target) {
  return scale(a, target / spectral_norm_value(a));
}

TEST(Preconditions, HandExamples) {
  GateParams gp = GateParams::constant(2, 1, 0.0, Activation::Sigmoid, GateMode::InputAndState);
  gp.u = scale(Mat::identity(2), 2.0);
  const ContractionReport r = check_preconditions(make_params(Mat{{0.9, 0}, {0, 0.2}}, Mat(2, 1)), gp,
                                                  UpdateForm::Pure);
  EXPECT_NEAR(r.rho, 0.9, 1e-12);
  EXPECT_NEAR(r.l_g, 0.5, 1e-12);
  EXPECT_EQ(r.kappa, r.rho * r.l_g);
  EXPECT_NEAR(r.kappa, 0.45, 1e-12);
  EXPECT_TRUE(r.precondition_met);

  const GateParams input_only = GateParams::constant(2, 1, 0.0);
  const ContractionReport r0 = check_preconditions(make_params(Mat{{0.9, 0}, {0, 0.2}}, Mat(2, 1)), input_only,
                                                   UpdateForm::Retentive);
  EXPECT_EQ(r0.kappa, 0.0);
  EXPECT_TRUE(r0.precondition_met);

  GateParams th = GateParams::constant(1, 1, 0.0, Activation::Tanh01, GateMode::InputAndState);
  th.u(0, 0) = 1.2;
  const ContractionReport r2 = check_preconditions(make_params(Mat{{2.0}}, Mat{{1}}), th, UpdateForm::Pure);
  EXPECT_NEAR(r2.kappa, 1.2, 1e-12);
  EXPECT_FALSE(r2.precondition_met);
}

TEST(Coupled, ScalarPureHalfGate) {
  const SsmParams p = make_params(Mat{{0.9}}, Mat{{1}});
  const GateParams gp = GateParams::constant(1, 1, 0.0);
  const CoupledRun run = coupled_contraction_test(p, gp, UpdateForm::Pure, Mat(60, 1), Vec{5.0}, Vec{-3.0}, 0, false);
  ASSERT_EQ(run.ratios.size(), 60u);
  for (double r : run.ratios) EXPECT_NEAR(r, 0.45, 1e-12);
}

TEST(Coupled, DrivenRatiosStopAtRoundingLevel) {
  const SsmParams p = make_params(Mat{{0.9}}, Mat{{1}});
  const GateParams gp = GateParams::constant(1, 1, 0.0);
  const CoupledRun run =
      coupled_contraction_test(p, gp, UpdateForm::Pure, random_mat(80, 1, 3), Vec{5.0}, Vec{-3.0}, 0, false);
  EXPECT_TRUE(run.merged);
  for (double r : run.ratios)
    if (r != 0.0) EXPECT_NEAR(r, 0.45, 1e-6);
}

TEST(Coupled, OpenRetentiveWithZeroA) {
  const SsmParams p = make_params(Mat(2, 2), Mat::identity(2), 0.1);
  const GateParams gp = GateParams::constant(2, 2, 60.0);
  const CoupledRun run =
      coupled_contraction_test(p, gp, UpdateForm::Retentive, random_mat(10, 2, 4), Vec{1, 2}, Vec{-1, 0}, 1, true);
  for (double r : run.ratios) EXPECT_EQ(r, 0.0);
  EXPECT_TRUE(run.merged);
}

TEST(Coupled, InputOnlyPureRatioBoundedByGateTimesNorm) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t d = 2 + seed % 6, m = 1 + seed % 3;
    const SsmParams p = make_params(random_mat(d, d, seed, 0.5), random_mat(d, m, seed + 1));
    const GateParams gp = random_gate(d, m, seed + 2, Activation::Sigmoid, GateMode::InputOnly);
    const Mat inputs = random_mat(50, m, seed + 3);
    const CoupledRun run = coupled_contraction_test(p, gp, UpdateForm::Pure, inputs, random_vec(d, seed + 4),
                                                    random_vec(d, seed + 5), seed, false);
    const double rho = spectral_norm_value(p.a);
    for (std::size_t t = 0; t < run.ratios.size(); ++t) {
      if (run.merged) break;
      const Vec g = gate_eval(gp, inputs.row(t), Vec(d));
      const double gmax = *std::max_element(g.begin(), g.end());
      EXPECT_LE(run.ratios[t], gmax * rho * (1.0 + 1e-6)) << "seed " << seed << " t " << t;
    }
  }
}

TEST(Coupled, StateDependentRatiosBoundedBySegmentJacobian) {
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const SsmParams p = make_params(scaled_to_norm(random_mat(3, 3, seed), 0.8), random_mat(3, 2, seed + 1));
    GateParams gp = random_gate(3, 2, seed + 2, Activation::Sigmoid, GateMode::InputAndState);
    gp.u = scaled_to_norm(gp.u, 1.0);
    for (UpdateForm form : {UpdateForm::Pure, UpdateForm::Retentive}) {
      const CoupledRun run = coupled_contraction_test(p, gp, form, random_mat(30, 2, seed + 3),
                                                      random_vec(3, seed + 4), random_vec(3, seed + 5), seed, false);
      for (std::size_t t = 0; t < run.ratios.size(); ++t) {
        if (run.merged) break;
        EXPECT_LE(run.ratios[t], run.segment_jacobian[t] * (1.0 + 1e-6) + 1e-9) << seed;
      }
    }
  }
}

TEST(Certify, StateDependentMaxRatioWithinTightKappa) {
  const SsmParams p = make_params(scaled_to_norm(random_mat(4, 4, 11), 0.9), random_mat(4, 2, 12), 0.01);
  GateParams gp = random_gate(4, 2, 13, Activation::Sigmoid, GateMode::InputAndState);
  gp.u = scaled_to_norm(gp.u, 2.0);
  const ContractionReport r = certify(p, gp, UpdateForm::Pure, CertifyOptions{64, 60, 1.0, 1.0, 5});
  EXPECT_NEAR(r.kappa, 0.45, 1e-9);
  EXPECT_TRUE(r.precondition_met);
  EXPECT_LE(r.max_empirical_ratio, r.tight_kappa + 1e-9);
  EXPECT_EQ(r.empirical_ratios.size(), 60u);
  for (double v : r.empirical_ratios) EXPECT_GE(v, 0.0);
}

// The product-rule term from the gate's own variation makes κ unsound as a one-step modulus:
// a scalar model with κ = 0.45 still expands distances.
TEST(Certify, KappaIsNotAContractionModulus) {
  const SsmParams p = make_params(Mat{{0.9}}, Mat{{1}});
  GateParams gp = GateParams::constant(1, 1, 0.0, Activation::Sigmoid, GateMode::InputAndState);
  gp.u(0, 0) = 2.0;
  const ContractionReport r = certify(p, gp, UpdateForm::Pure, CertifyOptions{16, 50, 3.0, 3.0, 1});
  EXPECT_NEAR(r.kappa, 0.45, 1e-12);
  EXPECT_GT(r.max_empirical_ratio, r.kappa);
  EXPECT_GE(r.tight_kappa, r.max_empirical_ratio - 1e-9);
}

TEST(StepJacobian, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SsmParams p = make_params(random_mat(3, 3, seed, 0.5), random_mat(3, 2, seed + 1));
    const GateParams gp = random_gate(3, 2, seed + 2, Activation::Tanh01, GateMode::InputAndState);
    const Vec x = random_vec(2, seed + 3), h = random_vec(3, seed + 4);
    for (UpdateForm form : {UpdateForm::Pure, UpdateForm::Retentive}) {
      Mat jac(3, 3);
      const double eps = 1e-6;
      for (std::size_t j = 0; j < 3; ++j) {
        Vec hp = h, hm = h;
        hp[j] += eps;
        hm[j] -= eps;
        const Vec fp = gated_step(p, gp, form, hp, x, {}).h, fm = gated_step(p, gp, form, hm, x, {}).h;
        for (std::size_t i = 0; i < 3; ++i) jac(i, j) = (fp[i] - fm[i]) / (2 * eps);
      }
      EXPECT_NEAR(step_jacobian_norm(p, gp, form, x, h), spectral_norm_value(jac), 1e-7);
    }
  }
}

TEST(StationaryCovariance, HandExamples) {
  // Retentive with g = 1 makes M = A.
  const Vec open{1.0};
  EXPECT_NEAR(stationary_covariance(make_params(Mat{{0.5}}, Mat{{0}}, 0.75), open, UpdateForm::Retentive)(0, 0),
              1.0, 1e-12);
  EXPECT_EQ(stationary_covariance(make_params(Mat{{0.5}}, Mat{{0}}, 0.0), open, UpdateForm::Retentive)(0, 0), 0.0);
  EXPECT_NEAR(stationary_covariance(make_params(Mat{{0.9}}, Mat{{0}}, 0.19), open, UpdateForm::Retentive)(0, 0),
              1.0, 1e-11);
}

TEST(StationaryCovariance, FixedPointAndPsd) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SsmParams p = make_params(scaled_to_norm(random_mat(4, 4, seed), 0.8), Mat(4, 1), 0.3);
    const Vec g{0.2, 0.7, 1.0, 0.5};
    for (UpdateForm form : {UpdateForm::Pure, UpdateForm::Retentive}) {
      const Mat m = fixed_gate_transition(p, g, form);
      if (spectral_norm_value(m) >= 1.0) continue;
      const double tol = 1e-12;
      const Mat s = stationary_covariance(p, g, form, tol);
      EXPECT_LT(frobenius_norm(sub(s, lyapunov_step(s, m, p.q))), tol * 10);
      EXPECT_GE(sym_eigen(s).values.back(), -1e-12);
    }
  }
}

TEST(StationaryCovariance, UnstableRaises) {
  try {
    stationary_covariance(make_params(Mat{{1.2}}, Mat{{0}}, 1.0), Vec{1.0}, UpdateForm::Pure);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Unstable);
  }
}

TEST(FixedPoint, ScalarGeometricSeries) {
  const SsmParams p = make_params(Mat{{0.9}}, Mat{{2.0}});
  const GateParams gp = GateParams::constant(1, 1, 0.0);
  const FixedPointResult r =
      fixed_point_test(p, &gp, UpdateForm::Pure, Vec{1.0}, {Vec{0.0}, Vec{10.0}, Vec{-7.0}}, 1e-12, 10000);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.fixed_point[0], 1.0 / (1.0 - 0.45), 1e-10);
}

TEST(FixedPoint, ZeroAReachedInOneStep) {
  const SsmParams p = make_params(Mat(2, 2), Mat::identity(2));
  const FixedPointResult r =
      fixed_point_test(p, nullptr, UpdateForm::Retentive, Vec{1, 2}, {Vec{1, 2}, Vec{5, 5}}, 1e-12, 100);
  EXPECT_EQ(r.fixed_point, (Vec{1, 2}));
  EXPECT_LE(r.iterations, 2u);
}

TEST(FixedPoint, ExpandingConfigFails) {
  const SsmParams p = make_params(Mat{{1.5}}, Mat{{1.0}});
  EXPECT_THROW(fixed_point_test(p, nullptr, UpdateForm::Pure, Vec{1.0}, {Vec{0.0}, Vec{1.0}}, 1e-10, 5000), Error);
}

TEST(FixedPoint, StartInvariantForContractingConfigs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SsmParams p = make_params(scaled_to_norm(random_mat(4, 4, seed), 0.85), random_mat(4, 2, seed + 1));
    GateParams gp = random_gate(4, 2, seed + 2, Activation::Sigmoid, GateMode::InputAndState);
    gp.u = scaled_to_norm(gp.u, 0.5);
    std::vector<Vec> starts;
    for (std::uint64_t k = 0; k < 5; ++k) starts.push_back(random_vec(4, 100 * seed + k, 3.0));
    const FixedPointResult r = fixed_point_test(p, &gp, UpdateForm::Pure, random_vec(2, seed + 9), starts, 1e-10, 100000);
    EXPECT_TRUE(r.converged);
    const Vec again = gated_step(p, gp, UpdateForm::Pure, r.fixed_point, random_vec(2, seed + 9), {}).h;
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(again[i], r.fixed_point[i], 1e-9);
  }
}

TEST(FixedPoint, SlowModeIsResolvedToTolerance) {
  // g = σ(-10): the retentive map contracts by 1 - g/2 per step; the fixed point is b·x/(1-a) = 4
  const SsmParams p = make_params(Mat{{0.5}}, Mat{{2.0}});
  const GateParams gp = GateParams::constant(1, 1, -10.0);
  const FixedPointResult r =
      fixed_point_test(p, &gp, UpdateForm::Retentive, Vec{1.0}, {Vec{0.0}, Vec{8.0}}, 1e-10, 5000000);
  EXPECT_NEAR(r.fixed_point[0], 4.0, 1e-10);
}

TEST(StepJacobian, MatrixMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SsmParams p = make_params(random_mat(3, 3, seed, 0.5), random_mat(3, 2, seed + 1));
    const GateParams gp = random_gate(3, 2, seed + 2, Activation::Tanh01, GateMode::InputAndState);
    const UpdateForm form = seed % 2 ? UpdateForm::Pure : UpdateForm::Retentive;
    const Vec x = random_vec(2, seed + 3), h = random_vec(3, seed + 4);
    const Mat jac = step_jacobian(p, gp, form, x, h);
    for (std::size_t j = 0; j < 3; ++j) {
      Vec hp = h, hm = h;
      hp[j] += 1e-6;
      hm[j] -= 1e-6;
      const Vec fp = gated_step(p, gp, form, hp, x, {}).h, fm = gated_step(p, gp, form, hm, x, {}).h;
      for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(jac(i, j), (fp[i] - fm[i]) / 2e-6, 1e-7);
    }
  }
}

}  // namespace
}  // namespace ssmlab
