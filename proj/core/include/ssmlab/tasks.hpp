#pragma once

// Synthetic sequence tasks: delayed token recall, selective copy and one-step forecasting.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssmlab/numerics.hpp"

namespace ssmlab {

enum class TaskKind { Recall, SelectiveCopy, ForecastSinusoid, ForecastAr2 };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);  // throws InvalidConfig

struct Sequence {
  Mat inputs;   // T×m
  Mat targets;  // T×n
  Vec mask;     // T, 1 where the step contributes to loss and accuracy
};

struct Dataset {
  std::vector<Sequence> sequences;
  TaskKind kind = TaskKind::Recall;
  std::size_t alphabet_size = 0;  // discrete tasks only
  std::size_t delay = 0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return sequences.size(); }
  std::size_t length() const noexcept;
  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  bool discrete() const noexcept { return kind == TaskKind::Recall || kind == TaskKind::SelectiveCopy; }
};

// Recall input layout: channels [0, K) carry one-hot tokens, channel K flags the cue at
// step 0 and channel K+1 flags the query at step `delay`. Distractor tokens fill every
// other step. The target at the query step is the cue token.
Dataset gen_recall(std::size_t alphabet, std::size_t delay, std::size_t t_len, std::size_t n_seq,
                   std::uint64_t seed);

// Selective copy: channels [0, K) token, channel K relevance flag, channel K+1 recall cue.
// Tokens occupy the first t_len steps; n_marked of them are flagged; they must be emitted
// in order over the n_marked steps that follow.
Dataset gen_selective_copy(std::size_t t_len, std::size_t n_marked, std::size_t alphabet, std::size_t n_seq,
                           std::uint64_t seed);

enum class ForecastKind { Sinusoid, Ar2 };

inline constexpr double kSineAmp1 = 1.0;
inline constexpr double kSineFreq1 = 0.3;
inline constexpr double kSineAmp2 = 0.5;
inline constexpr double kSineFreq2 = 0.3 * 1.6180339887498949;  // golden ratio keeps the pair incommensurate
inline constexpr double kAr2Phi1 = 0.6;
inline constexpr double kAr2Phi2 = -0.2;

// One input channel (current observation), one target channel (next observation).
Dataset gen_forecast(ForecastKind kind, double noise_sd, std::size_t t_len, std::size_t n_seq, std::uint64_t seed);

// Predict-last-value MSE for the sinusoid generator, in closed form:
// Σ_k a_k²(1 − cos ω_k) + 2σ².
double sinusoid_persistence_mse(double noise_sd);

// Empirical MSE of the persistence predictor over masked steps.
double persistence_mse(const Dataset& ds);

// Argmax match rate over masked steps; predictions are T×n per sequence.
double argmax_accuracy(const Dataset& ds, const std::vector<Mat>& predictions);

// Masked mean squared error (summed over output channels).
double masked_mse(const Dataset& ds, const std::vector<Mat>& predictions);

// 1 − mse / var(targets over masked steps), clamped to [0, 1].
double forecast_accuracy(const Dataset& ds, const std::vector<Mat>& predictions);

// K×K counts(true token, predicted token) over masked steps.
Mat confusion_counts(const Dataset& ds, const std::vector<Mat>& predictions);

// JSON lines: the first line holds the metadata, then one sequence per line.
void write_jsonl(std::ostream& os, const Dataset& ds);
Dataset read_jsonl(std::istream& is);

}  // namespace ssmlab
