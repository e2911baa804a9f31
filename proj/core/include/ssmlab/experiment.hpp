#pragma once

// End-to-end pipeline: generate a task, train a dense baseline and a gated model, then
// certify, analyze and account for memory. Also the λ sweep and the comparison report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssmlab/info.hpp"
#include "ssmlab/sparse.hpp"
#include "ssmlab/tasks.hpp"
#include "ssmlab/training.hpp"

namespace ssmlab {

struct TaskSpec {
  TaskKind kind = TaskKind::Recall;
  std::size_t alphabet = 8;
  std::size_t delay = 16;
  std::size_t t_len = 24;  // recall/forecast length; selective: token phase length
  std::size_t n_marked = 4;
  double noise_sd = 0.1;
  std::size_t n_train = 1024;
  std::size_t n_test = 512;

  static TaskSpec defaults(TaskKind kind);
};

// Train and test splits come from disjoint seed streams.
Dataset make_dataset(const TaskSpec& spec, std::uint64_t seed, bool test_split);

// Input and output widths of the model a task needs.
std::pair<std::size_t, std::size_t> task_io_dims(const TaskSpec& spec);

struct ModelSpec {
  std::size_t state_dim = 32;
  double lambda_gate = 0.3;
  TrainOptions gated_train{150, 0.2, 0.9, 32, 10.0, 0, {}};
  TrainOptions dense_train{150, 0.02, 0.9, 32, 10.0, 0, {}};
  double gate_threshold = kDefaultGateThreshold;
};

struct ExperimentConfig {
  TaskSpec task;
  ModelSpec model;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t mi_samples = 256;
  std::size_t certify_runs = 8;
  std::size_t timing_reps = 31;

  static ExperimentConfig defaults(TaskKind kind, std::uint64_t seed);
};

struct ModelOutcome {
  std::string name;
  double accuracy = 0.0;       // gated: evaluated with thresholded gates (what the delta store replays)
  double soft_accuracy = 0.0;  // gated: soft gates
  double memory_values = 0.0;  // mean per test sequence
  double memory_bytes = 0.0;
  double eff_dim_mean = 0.0;
  double final_loss = 0.0;
  double error_rate = 0.0;
  std::optional<double> fano_h_cond_bits;
  std::optional<double> fano_lower_bound;
  std::optional<MiEstimate> mi;
  TrainLog log;
  Model model;
};

struct ExperimentResult {
  ExperimentConfig config;
  ModelOutcome dense;
  ModelOutcome gated;
  double rho = 0.0, l_g = 0.0, kappa = 0.0, tight_kappa = 0.0, max_ratio = 0.0;
  bool precondition_met = false;
  std::optional<double> rd_total_variance;
  std::optional<double> rd_distortion_at_mi;
  double dense_step_ns = 0.0;   // median
  double sparse_step_ns = 0.0;  // median
  double active_fraction = 0.0;

  std::string summary_json() const;  // deterministic for fixed (config, seed)
  std::string timing_json() const;
};

// Runs the whole pipeline. With threads >= 2 the two models train concurrently.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes summary.json, timing.json, models, logs and the test set under outdir.
void write_experiment(const ExperimentResult& res, const std::filesystem::path& outdir);

// Predictions from a noiseless rollout with gates hard-thresholded at tau.
std::vector<Mat> predict_thresholded(const Model& model, const std::vector<Sequence>& seqs, double tau,
                                     double* mean_values = nullptr, double* active_fraction = nullptr);

struct BottleneckRow {
  double lambda = 0.0;
  double mi = 0.0;          // median over seeds, moment-matched upper bound (nats)
  double mi_std_err = 0.0;  // at the median seed
  double eff_dim_mean = 0.0;
  double accuracy = 0.0;
};

struct BottleneckFlag {
  double tau = 0.0;
  std::optional<std::size_t> row;  // smallest eff_dim_mean among rows with mi >= tau
};

struct BottleneckTable {
  std::vector<BottleneckRow> rows;
  std::vector<BottleneckFlag> flags;
  std::string csv() const;  // lambda,mi_nats,mi_stderr,eff_dim_mean,accuracy
};

// Trains one gated model per (λ, seed) and reports medians over seeds.
BottleneckTable bottleneck_sweep(const TaskSpec& task, const ModelSpec& model, const std::vector<double>& lambdas,
                                 const std::vector<double>& tau_list, const std::vector<std::uint64_t>& seeds,
                                 std::size_t mi_samples, std::size_t threads = 1);

struct ReportRow {
  std::string model;
  std::string task;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double memory_values = 0.0;
  double memory_bytes = 0.0;
  double eff_dim_mean = 0.0;
  std::size_t state_dim = 0;
};

struct ReportCheck {
  std::string source;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::vector<ReportRow> rows;
  std::vector<ReportCheck> checks;  // gated memory <= dense memory when gates are sparse
  std::string csv() const;          // model,task,seed,accuracy,memory_values,memory_bytes,eff_dim_mean
  std::string text() const;
  bool all_checks_passed() const;
};

// Each path is an experiment directory or a summary.json. Throws MissingSummary.
Report build_report(const std::vector<std::filesystem::path>& paths);

// Worker count from SSMLAB_THREADS (default 1, at least 1).
std::size_t threads_from_env();

}  // namespace ssmlab
