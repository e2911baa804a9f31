#include "ssmlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ssmlab/error.hpp"
#include "ssmlab/gating.hpp"
#include "ssmlab/model_io.hpp"
#include "ssmlab/stability.hpp"

namespace ssmlab {

namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Mat input_covariance(const Dataset& ds) {
  const std::size_t m = ds.input_dim();
  Vec mean(m, 0.0);
  Mat second(m, m);
  double n = 0.0;
  for (const Sequence& s : ds.sequences)
    for (std::size_t t = 0; t < s.inputs.rows(); ++t) {
      const auto x = s.inputs.row(t);
      for (std::size_t i = 0; i < m; ++i) {
        mean[i] += x[i];
        for (std::size_t j = 0; j < m; ++j) second(i, j) += x[i] * x[j];
      }
      n += 1.0;
    }
  Mat cov(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) cov(i, j) = second(i, j) / n - (mean[i] / n) * (mean[j] / n);
  return symmetrize(cov);
}

double task_accuracy(const Dataset& ds, const std::vector<Mat>& preds) {
  return ds.discrete() ? argmax_accuracy(ds, preds) : forecast_accuracy(ds, preds);
}

ModelSpec spec_with_lambda(ModelSpec spec, double lambda) {
  spec.lambda_gate = lambda;
  return spec;
}

Model train_gated(const TaskSpec& task, const ModelSpec& spec, const Dataset& train, std::uint64_t seed,
                  TrainLog* log) {
  const auto [m, n] = task_io_dims(task);
  InitOptions io;
  io.state_dim = spec.state_dim;
  io.input_dim = m;
  io.output_dim = n;
  io.gated = true;
  io.seed = mix_seed(seed, 5);
  Model model = init_model(io);
  TrainOptions opt = spec.gated_train;
  opt.seed = mix_seed(seed, 6);
  LossConfig cfg;
  cfg.lambda_gate = spec.lambda_gate;
  TrainLog l = sgd_train(model, train, opt, cfg);
  if (log) *log = std::move(l);
  return model;
}

Model train_dense(const TaskSpec& task, const ModelSpec& spec, const Dataset& train, std::uint64_t seed,
                  TrainLog* log) {
  const auto [m, n] = task_io_dims(task);
  InitOptions io;
  io.state_dim = spec.state_dim;
  io.input_dim = m;
  io.output_dim = n;
  io.gated = false;
  io.seed = mix_seed(seed, 3);
  Model model = init_model(io);
  TrainOptions opt = spec.dense_train;
  opt.seed = mix_seed(seed, 4);
  TrainLog l = sgd_train(model, train, opt, LossConfig{});
  if (log) *log = std::move(l);
  return model;
}

ordered_json mi_json(const std::optional<MiEstimate>& mi) {
  if (!mi) return nullptr;
  return {{"value_nats", mi->value},
          {"std_err", mi->std_err},
          {"kind", mi->kind == MiKind::ClosedForm ? "closed_form" : "moment_matched_upper_bound"},
          {"clamped", mi->clamped}};
}

template <typename T>
ordered_json opt_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json outcome_json(const ModelOutcome& o) {
  return {{"name", o.name},
          {"accuracy", o.accuracy},
          {"soft_accuracy", o.soft_accuracy},
          {"memory_values", o.memory_values},
          {"memory_bytes", o.memory_bytes},
          {"eff_dim_mean", o.eff_dim_mean},
          {"state_dim", o.model.params.state_dim()},
          {"final_loss", o.final_loss},
          {"error_rate", o.error_rate},
          {"fano_h_cond_bits", opt_json(o.fano_h_cond_bits)},
          {"fano_lower_bound", opt_json(o.fano_lower_bound)},
          {"mi", mi_json(o.mi)}};
}

void fill_fano(ModelOutcome& o, const Dataset& test, const std::vector<Mat>& preds) {
  if (!test.discrete()) return;
  const Mat counts = confusion_counts(test, preds);
  o.fano_h_cond_bits = conditional_entropy_bits(counts);
  o.fano_lower_bound = fano_bound_bits(*o.fano_h_cond_bits, test.alphabet_size);
}

}  // namespace

TaskSpec TaskSpec::defaults(TaskKind kind) {
  TaskSpec s;
  s.kind = kind;
  switch (kind) {
    case TaskKind::Recall: break;
    case TaskKind::SelectiveCopy:
      s.t_len = 12;
      s.n_marked = 3;
      break;
    case TaskKind::ForecastSinusoid:
    case TaskKind::ForecastAr2:
      s.t_len = 64;
      s.n_train = 256;
      s.n_test = 128;
      break;
  }
  return s;
}

Dataset make_dataset(const TaskSpec& spec, std::uint64_t seed, bool test_split) {
  const std::uint64_t s = mix_seed(seed, test_split ? 2 : 1);
  const std::size_t n = test_split ? spec.n_test : spec.n_train;
  switch (spec.kind) {
    case TaskKind::Recall: return gen_recall(spec.alphabet, spec.delay, spec.t_len, n, s);
    case TaskKind::SelectiveCopy: return gen_selective_copy(spec.t_len, spec.n_marked, spec.alphabet, n, s);
    case TaskKind::ForecastSinusoid: return gen_forecast(ForecastKind::Sinusoid, spec.noise_sd, spec.t_len, n, s);
    case TaskKind::ForecastAr2: return gen_forecast(ForecastKind::Ar2, spec.noise_sd, spec.t_len, n, s);
  }
  throw Error(Errc::InvalidConfig, "unknown task kind");
}

std::pair<std::size_t, std::size_t> task_io_dims(const TaskSpec& spec) {
  if (spec.kind == TaskKind::Recall || spec.kind == TaskKind::SelectiveCopy) return {spec.alphabet + 2, spec.alphabet};
  return {1, 1};
}

ExperimentConfig ExperimentConfig::defaults(TaskKind kind, std::uint64_t seed) {
  ExperimentConfig c;
  c.task = TaskSpec::defaults(kind);
  c.seed = seed;
  if (kind == TaskKind::ForecastSinusoid || kind == TaskKind::ForecastAr2) {
    c.model.state_dim = 16;
    c.model.lambda_gate = 0.01;
    c.model.gated_train.lr = 0.05;
  }
  return c;
}

std::vector<Mat> predict_thresholded(const Model& model, const std::vector<Sequence>& seqs, double tau,
                                     double* mean_values, double* active_fraction) {
  if (!model.gate || model.form != UpdateForm::Retentive)
    throw Error(Errc::ModeUnsupported, "thresholded replay needs a gated retentive model");
  const std::size_t d = model.params.state_dim();
  std::vector<Mat> preds;
  preds.reserve(seqs.size());
  double values = 0.0, active = 0.0, total = 0.0;
  const Vec h0(d, 0.0);
  for (const Sequence& s : seqs) {
    const SparseRollout r = sparse_rollout(model.params, *model.gate, s.inputs, h0, tau);
    Mat y(s.inputs.rows(), model.params.output_dim());
    for (std::size_t t = 0; t < s.inputs.rows(); ++t) {
      const Vec out = matvec(model.params.c, r.states.row(t));
      std::copy(out.begin(), out.end(), y.row(t).begin());
    }
    preds.push_back(std::move(y));
    values += static_cast<double>(r.deltas.memory_footprint().values);
    active += static_cast<double>(r.active_total);
    total += static_cast<double>(s.inputs.rows() * d);
  }
  if (mean_values) *mean_values = seqs.empty() ? 0.0 : values / static_cast<double>(seqs.size());
  if (active_fraction) *active_fraction = total == 0.0 ? 0.0 : active / total;
  return preds;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult res;
  res.config = cfg;
  const Dataset train = make_dataset(cfg.task, cfg.seed, false);
  const Dataset test = make_dataset(cfg.task, cfg.seed, true);
  const std::size_t d = cfg.model.state_dim;
  const std::size_t steps = test.length();

  parallel_for(2, cfg.threads, [&](std::size_t which) {
    if (which == 0)
      res.dense.model = train_dense(cfg.task, cfg.model, train, cfg.seed, &res.dense.log);
    else
      res.gated.model = train_gated(cfg.task, cfg.model, train, cfg.seed, &res.gated.log);
  });

  // dense baseline: every component is stored at every step
  ModelOutcome& dense = res.dense;
  dense.name = "dense";
  const std::vector<Mat> dense_pred = predict(dense.model, test.sequences);
  dense.accuracy = dense.soft_accuracy = task_accuracy(test, dense_pred);
  dense.memory_values = static_cast<double>(steps * d + d);
  dense.memory_bytes = static_cast<double>((steps * d + d) * sizeof(double));
  dense.eff_dim_mean = static_cast<double>(d);
  dense.final_loss = dense.log.rows.empty() ? 0.0 : dense.log.rows.back().loss;
  dense.error_rate = 1.0 - dense.accuracy;
  fill_fano(dense, test, dense_pred);

  ModelOutcome& gated = res.gated;
  gated.name = "gated";
  const std::vector<Mat> gated_pred =
      predict_thresholded(gated.model, test.sequences, cfg.model.gate_threshold, &gated.memory_values,
                          &res.active_fraction);
  gated.accuracy = task_accuracy(test, gated_pred);
  gated.soft_accuracy = task_accuracy(test, predict(gated.model, test.sequences));
  const double pairs = gated.memory_values - static_cast<double>(d);
  gated.memory_bytes = pairs * static_cast<double>(DeltaTrajectory::kIndexWidth + sizeof(double)) +
                       static_cast<double>(d * sizeof(double));
  gated.eff_dim_mean = mean_effective_dim(gated.model, test.sequences);
  gated.final_loss = gated.log.rows.empty() ? 0.0 : gated.log.rows.back().loss;
  gated.error_rate = 1.0 - gated.accuracy;
  fill_fano(gated, test, gated_pred);

  // certification of the gated model
  const GateParams& gp = *gated.model.gate;
  CertifyOptions co;
  co.n_runs = cfg.certify_runs;
  co.steps = steps;
  co.seed = mix_seed(cfg.seed, 7);
  const ContractionReport rep = certify(gated.model.params, gp, gated.model.form, co);
  res.rho = rep.rho;
  res.l_g = rep.l_g;
  res.kappa = rep.kappa;
  res.tight_kappa = rep.tight_kappa;
  res.max_ratio = rep.max_empirical_ratio;
  res.precondition_met = rep.precondition_met;

  // information analysis
  const Mat in_cov = input_covariance(train);
  try {
    gated.mi = state_mi_gated(gated.model.params, gp, gated.model.form, in_cov, steps, cfg.mi_samples,
                              mix_seed(cfg.seed, 8));
  } catch (const Error&) {
  }
  try {
    dense.mi = state_mi_linear(dense.model.params, in_cov, Mat(d, d), steps);
  } catch (const Error&) {
  }
  try {
    Vec mean(d, 0.0);
    Mat second(d, d);
    double n = 0.0;
    for (const Sequence& s : test.sequences) {
      const Trajectory tr = simulate(gated.model, s.inputs, Vec(d, 0.0), 0, false);
      for (std::size_t t = 0; t < tr.length(); ++t) {
        const auto h = tr.states.row(t);
        for (std::size_t i = 0; i < d; ++i) {
          mean[i] += h[i];
          for (std::size_t j = 0; j < d; ++j) second(i, j) += h[i] * h[j];
        }
        n += 1.0;
      }
    }
    Mat cov(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) = second(i, j) / n - (mean[i] / n) * (mean[j] / n);
    const RdCurve rd = rd_gaussian_grid(symmetrize(cov), 2001);
    res.rd_total_variance = rd.total_variance;
    if (gated.mi) res.rd_distortion_at_mi = rd_inverse(rd, gated.mi->value);
  } catch (const Error&) {
  }

  // step timing on the trained gated model (reported separately; not deterministic)
  {
    using clock = std::chrono::steady_clock;
    const std::size_t n_seq = std::min<std::size_t>(16, test.size());
    std::vector<double> dense_ns, sparse_ns;
    Vec h(d), next(d);
    volatile double sink = 0.0;
    for (std::size_t rep_i = 0; rep_i < cfg.timing_reps; ++rep_i) {
      for (int kernel = 0; kernel < 2; ++kernel) {
        const auto t0 = clock::now();
        std::size_t count = 0;
        for (std::size_t s = 0; s < n_seq; ++s) {
          std::fill(h.begin(), h.end(), 0.0);
          const Mat& inputs = test.sequences[s].inputs;
          for (std::size_t t = 0; t < inputs.rows(); ++t) {
            const auto x = inputs.row(t);
            const Vec g = gate_eval(gp, x, h);
            if (kernel == 0) {
              next = gated_update(gated.model.params, g, UpdateForm::Retentive, h, x, {});
            } else {
              const ActiveSet act = active_set(g, cfg.model.gate_threshold);
              sparse_step_rows_into(next, gated.model.params, g, act, h, x, {});
            }
            h.swap(next);
            ++count;
          }
          sink = sink + h[0];
        }
        const double ns =
            static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count());
        (kernel == 0 ? dense_ns : sparse_ns).push_back(ns / static_cast<double>(std::max<std::size_t>(count, 1)));
      }
    }
    res.dense_step_ns = median(dense_ns);
    res.sparse_step_ns = median(sparse_ns);
  }
  return res;
}

std::string ExperimentResult::summary_json() const {
  const TaskSpec& t = config.task;
  ordered_json j;
  j["task"] = to_string(t.kind);
  j["seed"] = config.seed;
  j["config"] = {{"alphabet", t.alphabet},
                 {"delay", t.delay},
                 {"t_len", t.t_len},
                 {"n_marked", t.n_marked},
                 {"noise_sd", t.noise_sd},
                 {"n_train", t.n_train},
                 {"n_test", t.n_test},
                 {"state_dim", config.model.state_dim},
                 {"lambda_gate", config.model.lambda_gate},
                 {"gate_threshold", config.model.gate_threshold},
                 {"gated_epochs", config.model.gated_train.epochs},
                 {"gated_lr", config.model.gated_train.lr},
                 {"dense_epochs", config.model.dense_train.epochs},
                 {"dense_lr", config.model.dense_train.lr},
                 {"momentum", config.model.gated_train.momentum},
                 {"batch_size", config.model.gated_train.batch_size},
                 {"mi_samples", config.mi_samples},
                 {"certify_runs", config.certify_runs}};
  j["models"] = ordered_json::array({outcome_json(dense), outcome_json(gated)});
  j["certify"] = {{"rho", rho},
                  {"l_g", l_g},
                  {"kappa", kappa},
                  {"precondition_met", precondition_met},
                  {"tight_kappa", tight_kappa},
                  {"max_empirical_ratio", max_ratio}};
  j["rate_distortion"] = {{"total_variance", opt_json(rd_total_variance)},
                          {"distortion_at_gated_mi", opt_json(rd_distortion_at_mi)}};
  j["memory"] = {{"active_fraction", active_fraction},
                 {"gated_values", gated.memory_values},
                 {"dense_values", dense.memory_values},
                 {"gated_le_dense", gated.memory_values <= dense.memory_values}};
  return j.dump(2) + "\n";
}

std::string ExperimentResult::timing_json() const {
  ordered_json j = {{"dense_step_ns_median", dense_step_ns},
                    {"sparse_step_ns_median", sparse_step_ns},
                    {"reps", config.timing_reps}};
  return j.dump(2) + "\n";
}

void write_experiment(const ExperimentResult& res, const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  write_text_file(outdir / "summary.json", res.summary_json());
  write_text_file(outdir / "timing.json", res.timing_json());
  save_model(outdir / "dense_model.json", res.dense.model);
  save_model(outdir / "gated_model.json", res.gated.model);
  write_text_file(outdir / "dense_log.csv", res.dense.log.csv());
  write_text_file(outdir / "gated_log.csv", res.gated.log.csv());
}

std::string BottleneckTable::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "lambda,mi_nats,mi_stderr,eff_dim_mean,accuracy\n";
  for (const BottleneckRow& r : rows)
    os << r.lambda << ',' << r.mi << ',' << r.mi_std_err << ',' << r.eff_dim_mean << ',' << r.accuracy << '\n';
  return os.str();
}

BottleneckTable bottleneck_sweep(const TaskSpec& task, const ModelSpec& model, const std::vector<double>& lambdas,
                                 const std::vector<double>& tau_list, const std::vector<std::uint64_t>& seeds,
                                 std::size_t mi_samples, std::size_t threads) {
  if (lambdas.empty() || seeds.empty()) throw Error(Errc::InvalidConfig, "bottleneck_sweep needs lambdas and seeds");
  struct Cell {
    double mi = 0.0, se = 0.0, eff = 0.0, acc = 0.0;
  };
  const std::size_t ns = seeds.size();
  std::vector<Cell> cells(lambdas.size() * ns);
  parallel_for(cells.size(), threads, [&](std::size_t idx) {
    const double lambda = lambdas[idx / ns];
    const std::uint64_t seed = seeds[idx % ns];
    const Dataset train = make_dataset(task, seed, false);
    const Dataset test = make_dataset(task, seed, true);
    const Model m = train_gated(task, spec_with_lambda(model, lambda), train, seed, nullptr);
    Cell& c = cells[idx];
    c.eff = mean_effective_dim(m, test.sequences);
    c.acc = task_accuracy(test, predict(m, test.sequences));
    const MiEstimate mi =
        state_mi_gated(m.params, *m.gate, m.form, input_covariance(train), test.length(), mi_samples, mix_seed(seed, 8));
    c.mi = mi.value;
    c.se = mi.std_err;
  });

  BottleneckTable table;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    std::vector<double> mi, eff, acc;
    for (std::size_t s = 0; s < ns; ++s) {
      const Cell& c = cells[l * ns + s];
      mi.push_back(c.mi);
      eff.push_back(c.eff);
      acc.push_back(c.acc);
    }
    BottleneckRow row;
    row.lambda = lambdas[l];
    row.mi = median(mi);
    row.eff_dim_mean = median(eff);
    row.accuracy = median(acc);
    // std_err of the seed whose MI is closest to the median
    std::size_t best = 0;
    for (std::size_t s = 1; s < ns; ++s)
      if (std::abs(cells[l * ns + s].mi - row.mi) < std::abs(cells[l * ns + best].mi - row.mi)) best = s;
    row.mi_std_err = cells[l * ns + best].se;
    table.rows.push_back(row);
  }
  for (const double tau : tau_list) {
    BottleneckFlag flag{tau, std::nullopt};
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      if (table.rows[r].mi >= tau && (!flag.row || table.rows[r].eff_dim_mean < table.rows[*flag.row].eff_dim_mean))
        flag.row = r;
    table.flags.push_back(flag);
  }
  return table;
}

std::string Report::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "model,task,seed,accuracy,memory_values,memory_bytes,eff_dim_mean\n";
  for (const ReportRow& r : rows)
    os << r.model << ',' << r.task << ',' << r.seed << ',' << r.accuracy << ',' << r.memory_values << ','
       << r.memory_bytes << ',' << r.eff_dim_mean << '\n';
  return os.str();
}

std::string Report::text() const {
  std::ostringstream os;
  os << std::left << std::setw(8) << "Model" << std::setw(20) << "Task" << std::right << std::setw(8) << "Seed"
     << std::setw(11) << "Accuracy" << std::setw(14) << "Memory(vals)" << std::setw(15) << "Memory(bytes)"
     << std::setw(10) << "dim_eff" << '\n';
  os << std::fixed;
  for (const ReportRow& r : rows)
    os << std::left << std::setw(8) << r.model << std::setw(20) << r.task << std::right << std::setw(8) << r.seed
       << std::setw(11) << std::setprecision(4) << r.accuracy << std::setw(14) << std::setprecision(1)
       << r.memory_values << std::setw(15) << std::setprecision(1) << r.memory_bytes << std::setw(10)
       << std::setprecision(3) << r.eff_dim_mean << '\n';
  for (const ReportCheck& c : checks)
    os << "memory check " << (c.passed ? "PASS" : "FAIL") << " [" << c.source << "] " << c.detail << '\n';
  return os.str();
}

bool Report::all_checks_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ReportCheck& c) { return c.passed; });
}

Report build_report(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw Error(Errc::MissingSummary, "report needs at least one summary");
  Report report;
  for (const auto& given : paths) {
    const std::filesystem::path file = std::filesystem::is_directory(given) ? given / "summary.json" : given;
    std::vector<ReportRow> rows;
    try {
      const auto j = nlohmann::json::parse(read_text_file(file));
      const std::string task = j.at("task").get<std::string>();
      const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
      for (const auto& m : j.at("models")) {
        ReportRow r;
        r.model = m.at("name").get<std::string>();
        r.task = task;
        r.seed = seed;
        r.accuracy = m.at("accuracy").get<double>();
        r.memory_values = m.at("memory_values").get<double>();
        r.memory_bytes = m.at("memory_bytes").get<double>();
        r.eff_dim_mean = m.at("eff_dim_mean").get<double>();
        r.state_dim = m.at("state_dim").get<std::size_t>();
        rows.push_back(r);
      }
    } catch (const std::exception& e) {
      throw Error(Errc::MissingSummary, "cannot read summary '" + file.string() + "': " + e.what());
    }
    const ReportRow* dense = nullptr;
    const ReportRow* gated = nullptr;
    for (const ReportRow& r : rows) {
      if (r.model == "dense") dense = &r;
      if (r.model == "gated") gated = &r;
    }
    if (dense && gated && gated->eff_dim_mean < static_cast<double>(gated->state_dim)) {
      ReportCheck c;
      c.source = file.string();
      c.passed = gated->memory_values < dense->memory_values;
      std::ostringstream os;
      os << "gated " << gated->memory_values << " values vs dense " << dense->memory_values;
      c.detail = os.str();
      report.checks.push_back(c);
    }
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  return report;
}

std::size_t threads_from_env() {
  const char* v = std::getenv("SSMLAB_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || n < 1) return 1;
  return static_cast<std::size_t>(n);
}

}  // namespace ssmlab
