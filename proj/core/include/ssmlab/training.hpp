#pragma once

// Backpropagation through time for gated (and ungated) SSMs with an L1 gate penalty,
// a finite-difference gradient check, and SGD with momentum.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssmlab/numerics.hpp"
#include "ssmlab/ssm.hpp"
#include "ssmlab/tasks.hpp"

namespace ssmlab {

enum class LossKind { MeanSquaredError };

struct LossConfig {
  double lambda_gate = 0.0;
  LossKind loss = LossKind::MeanSquaredError;
  std::size_t horizon = 0;  // 0 uses the full sequence, otherwise the first `horizon` steps

  void validate() const;
};

struct GradientSet {
  Mat d_a, d_b, d_c;
  Mat d_w, d_u;  // empty for ungated models
  Vec d_bias;

  double global_norm() const;
  void scale(double s);
};

struct SequenceCache {
  Mat states;  // (T+1)×d, row 0 is h0
  Mat gates;   // T×d
  Mat preact;  // T×d gate pre-activations
  Mat drive;   // T×d, A h_{t-1} + B x_t
  Mat outputs; // T×n
};

struct ForwardCache {
  Model model;
  const std::vector<Sequence>* batch = nullptr;  // must outlive the cache
  std::vector<SequenceCache> seqs;
  std::size_t horizon = 0;
  double task_loss = 0.0;
  double gate_penalty = 0.0;  // mean over sequences of l1_gate_penalty
  double mask_weight = 0.0;   // Σ mask over the batch
  double max_abs_preact = 0.0;
};

struct ForwardResult {
  double loss = 0.0;  // task_loss + lambda_gate·gate_penalty
  ForwardCache cache;
};

// Noise-free rollout from h0 = 0. Loss is the masked mean over batch and time of
// ‖y_t − target_t‖², plus lambda_gate times the mean per-sequence gate penalty.
// Throws DimensionMismatch or NonFiniteLoss.
ForwardResult forward_loss(const Model& model, const std::vector<Sequence>& batch, const LossConfig& cfg);

GradientSet bptt_grads(const ForwardCache& cache, const LossConfig& cfg);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;  // e.g. "a[1,2]"
  bool saturated = false;       // some |z| > 30, where the check is expected to lose accuracy
  std::size_t entries = 0;
};

// Central differences on every parameter entry. Throws InvalidConfig unless
// 1e-7 <= epsilon <= 1e-3.
FiniteDiffReport finite_diff_check(const Model& model, const std::vector<Sequence>& batch, const LossConfig& cfg,
                                   double epsilon);

enum class ParamId { A, B, C, W, U, Bias };

struct TrainOptions {
  std::size_t epochs = 100;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;  // 0 means full batch
  double clip_norm = 10.0;
  std::uint64_t seed = 0;
  std::vector<ParamId> frozen;
};

struct TrainLogRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double gate_l1 = 0.0;
  double eff_dim_mean = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  std::string csv() const;  // epoch,loss,gate_l1,eff_dim_mean
};

// SGD with momentum and global-norm clipping over shuffled minibatches. Each log row is
// evaluated on the full dataset after its epoch. Throws DivergedLoss when the loss
// exceeds 1e6.
TrainLog sgd_train(Model& model, const Dataset& data, const TrainOptions& opt, const LossConfig& cfg);

struct InitOptions {
  std::size_t state_dim = 16;
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  bool gated = true;
  UpdateForm form = UpdateForm::Retentive;
  Activation activation = Activation::Sigmoid;
  GateMode mode = GateMode::InputOnly;
  double noise_var = 1e-4;  // Q = noise_var·I, R = noise_var·I
  std::uint64_t seed = 0;
};

// A = 0.9·(random orthogonal near I), B, C, W, U ~ U(−0.1, 0.1), bias = 1.
Model init_model(const InitOptions& opt);

// Noise-free predictions y_t for each sequence.
std::vector<Mat> predict(const Model& model, const std::vector<Sequence>& seqs);

// Mean over sequences and steps of effective_dim(g_t); d for ungated models.
double mean_effective_dim(const Model& model, const std::vector<Sequence>& seqs);

}  // namespace ssmlab
