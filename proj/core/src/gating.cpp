#include "ssmlab/gating.hpp"

#include <algorithm>
#include <cmath>

#include "ssmlab/error.hpp"
#include "ssmlab/rng.hpp"

namespace ssmlab {

GateParams GateParams::constant(std::size_t d, std::size_t m, double bias, Activation act, GateMode mode) {
  return GateParams{Mat(d, m), Mat(d, d), Vec(d, bias), act, mode};
}

void GateParams::validate() const {
  const std::size_t d = bias.size();
  if (w.rows() != d) throw Error(Errc::DimensionMismatch, "gate W must have one row per state component");
  if (u.rows() != d || u.cols() != d) throw Error(Errc::DimensionMismatch, "gate U must be d×d");
}

double activate(Activation act, double z) noexcept {
  switch (act) {
    case Activation::Sigmoid:
      // split form keeps exp() from overflowing
      if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
      else {
        const double e = std::exp(z);
        return e / (1.0 + e);
      }
    case Activation::Tanh01:
      return 0.5 * (std::tanh(z) + 1.0);
  }
  return 0.0;
}

double activate_derivative(Activation act, double z) noexcept {
  switch (act) {
    case Activation::Sigmoid: {
      const double s = activate(act, z);
      return s * (1.0 - s);
    }
    case Activation::Tanh01: {
      const double t = std::tanh(z);
      return 0.5 * (1.0 - t * t);
    }
  }
  return 0.0;
}

double activation_slope_bound(Activation act) noexcept {
  return act == Activation::Sigmoid ? 0.25 : 0.5;
}

Vec gate_preactivation(const GateParams& gp, std::span<const double> x, std::span<const double> h_prev) {
  const std::size_t d = gp.state_dim();
  if (gp.w.cols() != x.size()) throw Error(Errc::DimensionMismatch, "gate input length must equal W columns");
  const bool use_state = gp.mode == GateMode::InputAndState;
  if (use_state && h_prev.size() != d)
    throw Error(Errc::DimensionMismatch, "gate state length must equal d");
  Vec z(d);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = gp.bias[i];
    const auto wr = gp.w.row(i);
    for (std::size_t k = 0; k < wr.size(); ++k) acc += wr[k] * x[k];
    if (use_state) {
      const auto ur = gp.u.row(i);
      for (std::size_t j = 0; j < d; ++j) acc += ur[j] * h_prev[j];
    }
    z[i] = acc;
  }
  return z;
}

Vec gate_eval(const GateParams& gp, std::span<const double> x, std::span<const double> h_prev) {
  Vec z = gate_preactivation(gp, x, h_prev);
  for (double& v : z) v = activate(gp.activation, v);
  return z;
}

LipschitzBound lipschitz_bound_analytic(const GateParams& gp) {
  if (gp.mode == GateMode::InputOnly || gp.u.empty()) return {0.0, LipschitzMethod::AnalyticSpectral};
  return {activation_slope_bound(gp.activation) * spectral_norm_value(gp.u), LipschitzMethod::AnalyticSpectral};
}

LipschitzBound lipschitz_estimate_empirical(const GateParams& gp, std::size_t n_pairs, double radius,
                                            std::uint64_t seed) {
  const std::size_t d = gp.state_dim();
  const std::size_t m = gp.input_dim();
  CounterRng rng(seed, Stream::Sampling);
  double best = 0.0;
  Vec x(m), h(d), h2(d);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    for (double& v : x) v = rng.uniform(-radius, radius);
    for (double& v : h) v = rng.uniform(-radius, radius);
    for (double& v : h2) v = rng.uniform(-radius, radius);
    double dh = 0.0;
    for (std::size_t i = 0; i < d; ++i) dh += (h[i] - h2[i]) * (h[i] - h2[i]);
    dh = std::sqrt(dh);
    if (dh == 0.0) continue;
    const Vec g1 = gate_eval(gp, x, h);
    const Vec g2 = gate_eval(gp, x, h2);
    double dg = 0.0;
    for (std::size_t i = 0; i < d; ++i) dg += (g1[i] - g2[i]) * (g1[i] - g2[i]);
    best = std::max(best, std::sqrt(dg) / dh);
  }
  return {best, LipschitzMethod::EmpiricalSampled};
}

double effective_dim(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) {
    if (v < -1e-12 || v > 1.0 + 1e-12 || std::isnan(v))
      throw Error(Errc::OutOfRange, "gate value " + std::to_string(v) + " outside [0,1]");
    s += v;
  }
  return s;
}

double l1_gate_penalty(const Mat& gates) {
  if (gates.rows() == 0) return 0.0;
  double s = 0.0;
  for (double v : gates.data()) s += std::abs(v);
  return s / static_cast<double>(gates.rows());
}

}  // namespace ssmlab
