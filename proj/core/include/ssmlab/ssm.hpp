#pragma once

// Stochastic linear state space model h_t = A h_{t-1} + B x_t + w_t, y_t = C h_t + v_t,
// together with its selectively gated variants.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

#include "ssmlab/gating.hpp"
#include "ssmlab/numerics.hpp"
#include "ssmlab/rng.hpp"

namespace ssmlab {

struct SsmParams {
  Mat a;  // d×d state transition
  Mat b;  // d×m input map
  Mat c;  // n×d output map
  Mat q;  // d×d process noise covariance
  Mat r;  // n×n observation noise covariance

  std::size_t state_dim() const noexcept { return a.rows(); }
  std::size_t input_dim() const noexcept { return b.cols(); }
  std::size_t output_dim() const noexcept { return c.rows(); }

  void validate() const;  // shapes consistent, q and r symmetric
};

// Pure:      h = g ⊙ (A h_prev + B x)                      (+ w when noise is on)
// Retentive: h = g ⊙ (A h_prev + B x) + (1 − g) ⊙ h_prev + w
enum class UpdateForm { Pure, Retentive };

// Noise defaults: off for Pure, on for Retentive.
constexpr bool default_noise(UpdateForm form) noexcept { return form == UpdateForm::Retentive; }

// Complete model description; an absent gate means the ungated (dense) recurrence.
struct Model {
  SsmParams params;
  std::optional<GateParams> gate;
  UpdateForm form = UpdateForm::Retentive;

  void validate() const;
};

// (A h)_i + (B x)_i, the shared row kernel of every update path.
double drive_row(const SsmParams& p, std::size_t i, std::span<const double> h_prev, std::span<const double> x) noexcept;

Vec dense_step(const SsmParams& p, std::span<const double> h_prev, std::span<const double> x,
               std::span<const double> w);

Vec observe(const SsmParams& p, std::span<const double> h, std::span<const double> v);

// a_eff = diag(g)·A, b_eff = diag(g)·B.
std::pair<Mat, Mat> effective_matrices(std::span<const double> g, const SsmParams& p);

// Gated update with an externally supplied gate vector. An empty w means no noise.
Vec gated_update(const SsmParams& p, std::span<const double> g, UpdateForm form, std::span<const double> h_prev,
                 std::span<const double> x, std::span<const double> w);

struct GatedStep {
  Vec h;
  Vec g;
};

GatedStep gated_step(const SsmParams& p, const GateParams& gp, UpdateForm form, std::span<const double> h_prev,
                     std::span<const double> x, std::span<const double> w);

struct Trajectory {
  Mat inputs;   // T×m
  Mat states;   // T×d
  Mat outputs;  // T×n
  Mat gates;    // T×d, all ones for the dense recurrence
  std::uint64_t seed = 0;

  std::size_t length() const noexcept { return states.rows(); }
};

// Draw w ~ N(0, cov) for step t, given a factor L with L·Lᵀ = cov.
Vec correlated_normal(const Mat& factor, std::uint64_t seed, Stream stream, std::uint64_t step);

// Roll out the recurrence over the rows of `inputs`. Throws NonFiniteState on overflow.
Trajectory simulate(const SsmParams& p, const GateParams* gp, UpdateForm form, const Mat& inputs,
                    std::span<const double> h0, std::uint64_t seed, bool noise);

inline Trajectory simulate(const Model& model, const Mat& inputs, std::span<const double> h0, std::uint64_t seed,
                           bool noise) {
  return simulate(model.params, model.gate ? &*model.gate : nullptr, model.form, inputs, h0, seed, noise);
}

}  // namespace ssmlab
