#pragma once

#include <cstdint>
#include <span>

#include "ssmlab/numerics.hpp"

namespace ssmlab {

enum class Activation { Sigmoid, Tanh01 };
enum class GateMode { InputOnly, InputAndState };

// Per-component gates g_i = act(W_i·x + U_i·h_prev + bias_i), one row of W and U per
// state component. In InputOnly mode U is ignored.
struct GateParams {
  Mat w;      // d×m
  Mat u;      // d×d
  Vec bias;   // d
  Activation activation = Activation::Sigmoid;
  GateMode mode = GateMode::InputOnly;

  std::size_t state_dim() const noexcept { return bias.size(); }
  std::size_t input_dim() const noexcept { return w.cols(); }

  // Zero weights with the given bias, i.e. a constant gate σ(bias).
  static GateParams constant(std::size_t d, std::size_t m, double bias,
                             Activation act = Activation::Sigmoid,
                             GateMode mode = GateMode::InputOnly);

  void validate() const;  // throws DimensionMismatch
};

double activate(Activation act, double z) noexcept;
// Derivative with respect to z.
double activate_derivative(Activation act, double z) noexcept;
// sup_z |act'(z)|: 1/4 for Sigmoid, 1/2 for Tanh01.
double activation_slope_bound(Activation act) noexcept;

// Gate pre-activations z = W·x + U·h_prev + bias.
Vec gate_preactivation(const GateParams& gp, std::span<const double> x, std::span<const double> h_prev);

Vec gate_eval(const GateParams& gp, std::span<const double> x, std::span<const double> h_prev);

enum class LipschitzMethod { AnalyticSpectral, EmpiricalSampled };

struct LipschitzBound {
  double l_g = 0.0;
  LipschitzMethod method = LipschitzMethod::AnalyticSpectral;
};

// L_G = sup|act'|·‖U‖₂ (ℓ2 norms throughout); zero in InputOnly mode.
LipschitzBound lipschitz_bound_analytic(const GateParams& gp);

// Max of ‖G(x,h)−G(x,h')‖₂/‖h−h'‖₂ over pairs sampled uniformly in [−radius, radius].
LipschitzBound lipschitz_estimate_empirical(const GateParams& gp, std::size_t n_pairs, double radius,
                                            std::uint64_t seed);

// Σ g_i; throws OutOfRange when an entry leaves [0,1] by more than 1e-12.
double effective_dim(std::span<const double> g);

// Mean per-step L1 mass (1/T)·Σ_t Σ_i g_{t,i} of a T×d gate record.
double l1_gate_penalty(const Mat& gates);

}  // namespace ssmlab
