#pragma once

// Active-set kernels for the retentive update and delta-encoded trajectory storage.
//
// Components whose gate falls below the threshold τ_g are treated as exactly closed:
// they keep their previous value (plus noise), so only active rows need recomputing.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssmlab/numerics.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab {

inline constexpr double kDefaultGateThreshold = 1e-3;

struct ActiveSet {
  std::vector<std::uint32_t> indices;  // sorted, unique
  double threshold = kDefaultGateThreshold;

  std::size_t size() const noexcept { return indices.size(); }
};

// Indices with g_i >= tau. Throws OutOfRange unless 0 < tau < 1.
ActiveSet active_set(std::span<const double> g, double tau);

ActiveSet full_active_set(std::size_t d, double tau = kDefaultGateThreshold);

// Gate vector with every component below the threshold set to exactly 0.
Vec threshold_gates(std::span<const double> g, double tau);

// Exact retentive update restricted to active rows, O(k·d + k·m + d). Bitwise equal to
// gated_update(p, threshold_gates(g), Retentive, ...). An empty w means no noise.
Vec sparse_step_rows(const SsmParams& p, std::span<const double> g, const ActiveSet& act,
                     std::span<const double> h_prev, std::span<const double> x, std::span<const double> w);

void sparse_step_rows_into(std::span<double> out, const SsmParams& p, std::span<const double> g,
                           const ActiveSet& act, std::span<const double> h_prev, std::span<const double> x,
                           std::span<const double> w);

struct BlockStep {
  Vec h;
  // Per active row: g_i·‖A_i restricted to components outside act_prev‖₂·‖h_prev outside act_prev‖₂,
  // an upper bound on |h_i − exact h_i|; max over rows in `error_bound`.
  std::vector<double> row_bounds;
  double error_bound = 0.0;
};

// Approximate kernel that multiplies only the act × act_prev block of A, O(k² + k·m + d).
// Row norms of A are computed once at construction.
class BlockKernel {
 public:
  explicit BlockKernel(const SsmParams& p);

  BlockStep step(std::span<const double> g, const ActiveSet& act_prev, const ActiveSet& act,
                 std::span<const double> h_prev, std::span<const double> x, std::span<const double> w) const;

  // Kernel only, no error bound; `scratch` must hold at least d doubles.
  void step_into(std::span<double> out, std::span<double> scratch, std::span<const double> g,
                 const ActiveSet& act_prev, const ActiveSet& act, std::span<const double> h_prev,
                 std::span<const double> x, std::span<const double> w) const;

 private:
  SsmParams p_;
  Vec row_norm_sq_;
};

BlockStep sparse_step_block(const SsmParams& p, std::span<const double> g, const ActiveSet& act_prev,
                            const ActiveSet& act, std::span<const double> h_prev, std::span<const double> x,
                            std::span<const double> w);

struct MemoryFootprint {
  std::size_t pairs = 0;   // stored (index, value) pairs
  std::size_t values = 0;  // pairs + d base values
  std::size_t bytes = 0;   // pairs·(index_width + 8) + d·8
};

// Base state plus per-step sparse (index, value) updates.
class DeltaTrajectory {
 public:
  static constexpr std::size_t kIndexWidth = sizeof(std::uint32_t);

  DeltaTrajectory() = default;
  DeltaTrajectory(Vec h0, double threshold);

  std::size_t dim() const noexcept { return h0_.size(); }
  std::size_t steps() const noexcept { return offsets_.size() - 1; }
  double threshold() const noexcept { return threshold_; }
  const Vec& base() const noexcept { return h0_; }

  // Appends one step; `new_values` are aligned with act.indices. Throws IndexOutOfRange.
  void append(const ActiveSet& act, std::span<const double> new_values);

  // Convenience: store the active components of a full state vector.
  void append_state(const ActiveSet& act, std::span<const double> state);

  // State after the first t steps; reconstruct(0) is the base state.
  Vec reconstruct(std::size_t t) const;

  std::span<const std::uint32_t> step_indices(std::size_t t) const;
  std::span<const double> step_values(std::size_t t) const;

  MemoryFootprint memory_footprint() const noexcept;

 private:
  Vec h0_;
  double threshold_ = kDefaultGateThreshold;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

inline void delta_append(DeltaTrajectory& dt, const ActiveSet& act, std::span<const double> new_values) {
  dt.append(act, new_values);
}

inline MemoryFootprint memory_footprint(const DeltaTrajectory& dt) noexcept { return dt.memory_footprint(); }

struct SparseRollout {
  DeltaTrajectory deltas;
  Mat states;  // T×d, exact thresholded-gate states
  Mat gates;   // T×d, soft gate values before thresholding
  std::size_t active_total = 0;
};

// Noiseless retentive rollout with hard-thresholded gates via sparse_step_rows, recorded
// both densely and as a DeltaTrajectory.
SparseRollout sparse_rollout(const SsmParams& p, const GateParams& gp, const Mat& inputs, std::span<const double> h0,
                             double tau = kDefaultGateThreshold);

struct BenchRow {
  std::string kernel;
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t reps = 0;
  double median_ns = 0.0;
  double p10_ns = 0.0;
  double p90_ns = 0.0;
};

struct BenchOptions {
  std::vector<std::size_t> dims{64, 128, 256, 512};
  std::vector<double> sparsity{0.0625, 0.25, 1.0};
  std::size_t reps = 50;
  std::size_t input_dim = 16;
  std::uint64_t seed = 0;
  double min_rep_ns = 20000.0;  // each rep loops the kernel until this much time has passed
};

// Times dense gated_update, sparse_step_rows and the block kernel (ns per call).
std::vector<BenchRow> bench_scaling(const BenchOptions& opt);

// Least-squares slope of log(median_ns) against log(k) for one kernel at one d.
double loglog_slope(const std::vector<BenchRow>& rows, const std::string& kernel, std::size_t d);

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace ssmlab
