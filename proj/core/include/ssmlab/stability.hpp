#pragma once

// Contraction and convergence evidence for gated recurrences: the analytic constant
// κ = ‖A‖₂·L_G, coupled-trajectory ratios, stationary covariances and fixed points.

#include <cstdint>
#include <span>
#include <vector>

#include "ssmlab/gating.hpp"
#include "ssmlab/numerics.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab {

struct ContractionReport {
  double rho = 0.0;
  double l_g = 0.0;
  double kappa = 0.0;  // rho · l_g
  bool precondition_met = false;
  std::vector<double> empirical_ratios;
  double max_empirical_ratio = 0.0;
  // Sampled supremum of ‖∂h_t/∂h_{t-1}‖₂, which also accounts for the gate's own variation.
  double tight_kappa = 0.0;
  GateMode mode = GateMode::InputOnly;
  UpdateForm form = UpdateForm::Retentive;
};

// Analytic fields only.
ContractionReport check_preconditions(const SsmParams& p, const GateParams& gp, UpdateForm form);

// ∂F/∂h of the noiseless one-step map F at (x, h).
Mat step_jacobian(const SsmParams& p, const GateParams& gp, UpdateForm form, std::span<const double> x,
                  std::span<const double> h);

// ‖∂F/∂h‖₂ at (x, h).
double step_jacobian_norm(const SsmParams& p, const GateParams& gp, UpdateForm form, std::span<const double> x,
                          std::span<const double> h);

struct CoupledRun {
  std::vector<double> ratios;  // ‖Δ_t‖ / ‖Δ_{t-1}‖, t = 1..T
  std::vector<double> gaps;    // ‖Δ_t‖, t = 0..T
  // Per step: max Jacobian norm sampled on the segment between the two previous states.
  std::vector<double> segment_jacobian;
  bool merged = false;  // gap fell to 1e-8 of the state norm (rounding level); later ratios are reported as 0
};

// Runs two trajectories that share inputs and the same noise draws, starting from h0
// and h0_alt. Noise is applied when `noise` is set (default per form).
CoupledRun coupled_contraction_test(const SsmParams& p, const GateParams& gp, UpdateForm form, const Mat& inputs,
                                    std::span<const double> h0, std::span<const double> h0_alt,
                                    std::uint64_t seed, bool noise);

struct CertifyOptions {
  std::size_t n_runs = 64;
  std::size_t steps = 100;
  double input_scale = 1.0;
  double state_scale = 1.0;
  std::uint64_t seed = 0;
};

// check_preconditions plus empirical evidence: coupled runs over random inputs and
// starting points, and the sampled Jacobian constant.
ContractionReport certify(const SsmParams& p, const GateParams& gp, UpdateForm form, const CertifyOptions& opt);

// Fixed point of Σ ← MΣMᵀ + Q for the fixed-gate map M. Throws Unstable when ‖M‖₂ ≥ 1.
Mat stationary_covariance(const SsmParams& p, std::span<const double> g, UpdateForm form, double tol = 1e-13,
                          std::size_t max_iter = 1000000);

// M = diag(g)·A, plus I − diag(g) for the retentive form.
Mat fixed_gate_transition(const SsmParams& p, std::span<const double> g, UpdateForm form);

struct FixedPointResult {
  Vec fixed_point;
  std::size_t iterations = 0;  // worst case across starts
  bool converged = false;
};

// Iterates the noiseless map under constant input from every start. Throws NoConvergence
// or MultipleFixedPoints (endpoints disagree by more than 10·tol).
FixedPointResult fixed_point_test(const SsmParams& p, const GateParams* gp, UpdateForm form,
                                  std::span<const double> x_const, const std::vector<Vec>& starts, double tol,
                                  std::size_t max_iter);

}  // namespace ssmlab
