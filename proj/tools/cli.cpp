#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssmlab/error.hpp"
#include "ssmlab/experiment.hpp"
#include "ssmlab/info.hpp"
#include "ssmlab/model_io.hpp"
#include "ssmlab/rng.hpp"
#include "ssmlab/sparse.hpp"
#include "ssmlab/stability.hpp"
#include "ssmlab/tasks.hpp"
#include "ssmlab/training.hpp"

namespace ssmlab::cli {

namespace {

namespace fs = std::filesystem;

bool is_validation(Errc c) {
  switch (c) {
    case Errc::BadConfig:
    case Errc::InvalidConfig:
    case Errc::DimensionMismatch:
    case Errc::OutOfRange:
    case Errc::DistortionOutOfRange:
    case Errc::NotSymmetric:
      return true;
    default:
      return false;
  }
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text_file(path, text);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

Mat gaussian_inputs(std::size_t steps, std::size_t m, double scale, std::uint64_t seed) {
  Mat inputs(steps, m);
  for (std::size_t t = 0; t < steps; ++t) {
    auto row = inputs.row(t);
    for (std::size_t k = 0; k < m; ++k) row[k] = scale * counter_normal(seed, Stream::Inputs, t, k);
  }
  return inputs;
}

struct SimulateArgs {
  std::string model, out, noise = "default";
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  double input_scale = 1.0;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  const Model model = load_model(a.model);
  if (a.noise != "default" && a.noise != "on" && a.noise != "off")
    throw Error(Errc::BadConfig, "field 'noise' must be default, on or off");
  const bool noise = a.noise == "default" ? default_noise(model.form) : a.noise == "on";
  const std::size_t d = model.params.state_dim();
  const Mat inputs = gaussian_inputs(a.steps, model.params.input_dim(), a.input_scale, a.seed);
  const Trajectory traj = simulate(model, inputs, Vec(d, 0.0), a.seed, noise);
  emit(trajectory_to_json_string(traj), a.out, out);
  return kExitOk;
}

struct CertifyArgs {
  std::string model, out;
  std::size_t runs = 64, steps = 100;
  std::uint64_t seed = 0;
};

int do_certify(const CertifyArgs& a, std::ostream& out) {
  const Model model = load_model(a.model);
  if (!model.gate) throw Error(Errc::BadConfig, "field 'gate' is required for certify");
  CertifyOptions opt;
  opt.n_runs = a.runs;
  opt.steps = a.steps;
  opt.seed = a.seed;
  const ContractionReport r = certify(model.params, *model.gate, model.form, opt);
  nlohmann::ordered_json j = {{"rho", r.rho},
                              {"l_g", r.l_g},
                              {"kappa", r.kappa},
                              {"precondition_met", r.precondition_met},
                              {"max_empirical_ratio", r.max_empirical_ratio},
                              {"tight_kappa", r.tight_kappa},
                              {"mode", to_string(r.mode)},
                              {"form", to_string(r.form)},
                              {"empirical_ratios", r.empirical_ratios}};
  emit(j.dump(2) + "\n", a.out, out);
  return kExitOk;
}

struct MiArgs {
  std::string model, out;
  std::size_t t = 10, mc = 256;
  std::uint64_t seed = 0;
  double input_var = 1.0;
};

int do_mi(const MiArgs& a, std::ostream& out) {
  const Model model = load_model(a.model);
  if (a.t == 0) throw Error(Errc::BadConfig, "field 't' must be at least 1");
  const std::size_t d = model.params.state_dim();
  const Mat in_cov = scale(Mat::identity(model.params.input_dim()), a.input_var);
  std::ostringstream os;
  os << "t,mi_nats,mi_stderr,kind\n";
  for (std::size_t t = 1; t <= a.t; ++t) {
    const MiEstimate mi = model.gate
                              ? state_mi_gated(model.params, *model.gate, model.form, in_cov, t, a.mc, a.seed)
                              : state_mi_linear(model.params, in_cov, Mat(d, d), t);
    os << t << ',' << fmt(mi.value) << ',' << fmt(mi.std_err) << ','
       << (mi.kind == MiKind::ClosedForm ? "closed_form" : "upper_bound") << '\n';
  }
  emit(os.str(), a.out, out);
  return kExitOk;
}

struct RdArgs {
  std::string model, out;
  std::optional<double> var;
  std::size_t points = 101;
  std::vector<double> d;
};

int do_rd(const RdArgs& a, std::ostream& out) {
  if (a.model.empty() == !a.var.has_value()) throw Error(Errc::BadConfig, "give exactly one of --model or --var");
  Mat cov;
  if (a.var) {
    if (!(*a.var > 0.0)) throw Error(Errc::BadConfig, "field 'var' must be positive");
    cov = Mat{{*a.var}};
  } else {
    // stationary covariance under the gate seen at zero input and zero state
    const Model model = load_model(a.model);
    const std::size_t d = model.params.state_dim();
    const Vec g = model.gate ? gate_eval(*model.gate, Vec(model.params.input_dim(), 0.0), Vec(d, 0.0)) : Vec(d, 1.0);
    cov = stationary_covariance(model.params, g, model.gate ? model.form : UpdateForm::Pure);
  }
  const RdCurve rd = a.d.empty() ? rd_gaussian_grid(cov, a.points) : rd_gaussian(cov, a.d);
  std::ostringstream os;
  os << "d,rate_nats\n";
  for (const RdPoint& p : rd.points) os << fmt(p.distortion) << ',' << fmt(p.rate) << '\n';
  emit(os.str(), a.out, out);
  return kExitOk;
}

struct FanoArgs {
  double hcond_bits = 0.0;
  std::size_t alphabet = 2;
  std::string out;
};

int do_fano(const FanoArgs& a, std::ostream& out) {
  if (a.alphabet < 2) throw Error(Errc::BadConfig, "field 'alphabet' must be at least 2");
  if (!(a.hcond_bits >= 0.0)) throw Error(Errc::BadConfig, "field 'hcond-bits' must be non-negative");
  std::ostringstream os;
  os << "hcond_bits,alphabet,pe_lower_bound\n"
     << fmt(a.hcond_bits) << ',' << a.alphabet << ',' << fmt(fano_bound_bits(a.hcond_bits, a.alphabet)) << '\n';
  emit(os.str(), a.out, out);
  return kExitOk;
}

struct TrainArgs {
  std::string task = "recall";
  double lambda = 0.3, lr = -1.0, momentum = 0.9;
  std::size_t epochs = 150, dim = 32, batch = 32;
  std::uint64_t seed = 0;
  bool dense = false;
  std::vector<std::string> out;
};

int do_train(const TrainArgs& a, std::ostream& out) {
  const TaskKind kind = task_kind_from_string(a.task);
  if (a.out.size() != 2) throw Error(Errc::BadConfig, "field 'out' must be model.json,log.csv");
  ExperimentConfig cfg = ExperimentConfig::defaults(kind, a.seed);
  const Dataset train = make_dataset(cfg.task, a.seed, false);
  const auto [m, n] = task_io_dims(cfg.task);
  InitOptions io;
  io.state_dim = a.dim;
  io.input_dim = m;
  io.output_dim = n;
  io.gated = !a.dense;
  io.seed = a.seed;
  Model model = init_model(io);
  TrainOptions opt = a.dense ? cfg.model.dense_train : cfg.model.gated_train;
  opt.epochs = a.epochs;
  if (a.lr >= 0.0) opt.lr = a.lr;
  opt.momentum = a.momentum;
  opt.batch_size = a.batch;
  opt.seed = a.seed;
  LossConfig lc;
  lc.lambda_gate = a.dense ? 0.0 : a.lambda;
  const TrainLog log = sgd_train(model, train, opt, lc);
  save_model(a.out[0], model);
  write_text_file(a.out[1], log.csv());
  if (!log.rows.empty())
    out << "final loss " << fmt(log.rows.back().loss) << ", eff_dim_mean " << fmt(log.rows.back().eff_dim_mean)
        << '\n';
  return kExitOk;
}

struct BenchArgs {
  std::vector<std::size_t> dims{64, 128, 256, 512};
  std::vector<double> sparsity{0.0625, 0.25, 1.0};
  std::size_t reps = 50;
  std::uint64_t seed = 0;
  std::string out;
};

int do_bench(const BenchArgs& a, std::ostream& out) {
  BenchOptions opt;
  opt.dims = a.dims;
  opt.sparsity = a.sparsity;
  opt.reps = a.reps;
  opt.seed = a.seed;
  const auto rows = bench_scaling(opt);
  emit(bench_csv(rows), a.out, out);
  if (!a.out.empty() && a.sparsity.size() >= 2)
    for (const std::size_t d : a.dims)
      out << "d=" << d << " slope block " << fmt(loglog_slope(rows, "block", d)) << ", rows "
          << fmt(loglog_slope(rows, "rows", d)) << '\n';
  return kExitOk;
}

struct ExperimentArgs {
  std::string task = "recall", outdir;
  std::uint64_t seed = 0;
  std::optional<std::size_t> epochs;
  std::optional<double> lambda;
};

int do_experiment(const ExperimentArgs& a, std::ostream& out) {
  ExperimentConfig cfg = ExperimentConfig::defaults(task_kind_from_string(a.task), a.seed);
  cfg.threads = threads_from_env();
  if (a.epochs) cfg.model.gated_train.epochs = cfg.model.dense_train.epochs = *a.epochs;
  if (a.lambda) cfg.model.lambda_gate = *a.lambda;
  const ExperimentResult res = run_experiment(cfg);
  write_experiment(res, a.outdir);
  const Report rep = build_report({fs::path(a.outdir)});
  out << rep.text();
  return kExitOk;
}

struct SweepArgs {
  std::string task = "recall", out;
  std::vector<double> lambdas{0.0, 1e-3, 1e-2}, taus{0.5};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t mc = 128;
  std::optional<std::size_t> epochs;
};

int do_sweep(const SweepArgs& a, std::ostream& out) {
  ExperimentConfig cfg = ExperimentConfig::defaults(task_kind_from_string(a.task), 0);
  if (a.epochs) cfg.model.gated_train.epochs = *a.epochs;
  const BottleneckTable t =
      bottleneck_sweep(cfg.task, cfg.model, a.lambdas, a.taus, a.seeds, a.mc, threads_from_env());
  emit(t.csv(), a.out, out);
  for (const BottleneckFlag& f : t.flags) {
    out << "tau " << fmt(f.tau) << ": ";
    if (f.row)
      out << "lambda " << fmt(t.rows[*f.row].lambda) << " (eff_dim_mean " << fmt(t.rows[*f.row].eff_dim_mean) << ")\n";
    else
      out << "no model reaches the information floor\n";
  }
  return kExitOk;
}

int do_report(const std::vector<std::string>& paths, const std::string& csv_out, std::ostream& out) {
  std::vector<fs::path> p(paths.begin(), paths.end());
  const Report rep = build_report(p);
  if (!csv_out.empty()) write_text_file(csv_out, rep.csv());
  out << rep.text();
  return rep.all_checks_passed() ? kExitOk : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ssmlab: selective stochastic state space models with gated memory compression"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 runtime error, 2 validation error.\n"
      "CSV columns: mi t,mi_nats,mi_stderr,kind | rd d,rate_nats | fano hcond_bits,alphabet,pe_lower_bound |\n"
      "  bench kernel,d,k,reps,median_ns,p10_ns,p90_ns | train log epoch,loss,gate_l1,eff_dim_mean |\n"
      "  sweep lambda,mi_nats,mi_stderr,eff_dim_mean,accuracy | report model,task,seed,accuracy,memory_values,"
      "memory_bytes,eff_dim_mean\n"
      "SSMLAB_THREADS caps worker threads for experiment and sweep.");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Roll out a model on Gaussian inputs; writes trajectory JSON");
  c_sim->add_option("--model", sim.model, "Model JSON")->required();
  c_sim->add_option("--steps", sim.steps, "Number of steps")->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.seed, "Seed for inputs and noise")->required();
  c_sim->add_option("--out", sim.out, "Output path (stdout if omitted)");
  c_sim->add_option("--noise", sim.noise, "default|on|off (default: on for retentive, off for pure)");
  c_sim->add_option("--input-scale", sim.input_scale, "Standard deviation of the inputs");

  CertifyArgs cer;
  auto* c_cer = app.add_subcommand("certify", "Contraction report: rho, L_G, kappa and coupled-run evidence");
  c_cer->add_option("--model", cer.model, "Model JSON")->required();
  c_cer->add_option("--out", cer.out, "Report JSON path (stdout if omitted)");
  c_cer->add_option("--runs", cer.runs, "Coupled runs")->check(CLI::PositiveNumber);
  c_cer->add_option("--steps", cer.steps, "Steps per run")->check(CLI::PositiveNumber);
  c_cer->add_option("--seed", cer.seed, "Seed");

  MiArgs mi;
  auto* c_mi = app.add_subcommand("mi", "I(h_t; x_1..t) for t = 1..T under isotropic Gaussian inputs");
  c_mi->add_option("--model", mi.model, "Model JSON")->required();
  c_mi->add_option("--t", mi.t, "Horizon T");
  c_mi->add_option("--mc", mi.mc, "Monte Carlo sequences (gated models)");
  c_mi->add_option("--seed", mi.seed, "Seed")->required();
  c_mi->add_option("--input-var", mi.input_var, "Input variance per channel");
  c_mi->add_option("--out", mi.out, "CSV path (stdout if omitted)");

  RdArgs rd;
  auto* c_rd = app.add_subcommand("rd", "Gaussian rate-distortion curve of a model's stationary state or a scalar");
  c_rd->add_option("--model", rd.model, "Model JSON (stationary state at the zero-input gate)");
  c_rd->add_option("--var", rd.var, "Scalar source variance");
  c_rd->add_option("--points", rd.points, "Grid points when --d is not given");
  c_rd->add_option("--d", rd.d, "Distortions to evaluate")->delimiter(',');
  c_rd->add_option("--out", rd.out, "CSV path (stdout if omitted)");

  FanoArgs fa;
  auto* c_fa = app.add_subcommand("fano", "Fano lower bound on the error probability");
  c_fa->add_option("--hcond-bits", fa.hcond_bits, "H(X | Y) in bits")->required();
  c_fa->add_option("--alphabet", fa.alphabet, "Alphabet size K")->required();
  c_fa->add_option("--out", fa.out, "CSV path (stdout if omitted)");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a model on a synthetic task");
  c_tr->add_option("--task", tr.task, "recall|selective|forecast|forecast_ar2");
  c_tr->add_option("--lambda", tr.lambda, "L1 gate penalty weight");
  c_tr->add_option("--epochs", tr.epochs, "Epochs");
  c_tr->add_option("--lr", tr.lr, "Learning rate (task default if omitted)");
  c_tr->add_option("--momentum", tr.momentum, "Momentum");
  c_tr->add_option("--batch", tr.batch, "Minibatch size");
  c_tr->add_option("--dim", tr.dim, "State dimension");
  c_tr->add_option("--seed", tr.seed, "Seed")->required();
  c_tr->add_flag("--dense", tr.dense, "Train an ungated baseline");
  c_tr->add_option("--out", tr.out, "model.json,log.csv")->delimiter(',')->required();

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "Time dense, row-sparse and block-sparse update kernels");
  c_be->add_option("--dims", be.dims, "State dimensions")->delimiter(',');
  c_be->add_option("--sparsity", be.sparsity, "Active fractions")->delimiter(',');
  c_be->add_option("--reps", be.reps, "Repetitions (>= 30)");
  c_be->add_option("--seed", be.seed, "Seed");
  c_be->add_option("--out", be.out, "CSV path (stdout if omitted)");

  ExperimentArgs ex;
  auto* c_ex = app.add_subcommand("experiment", "Full pipeline: dense baseline vs gated model on one task");
  c_ex->add_option("--task", ex.task, "recall|selective|forecast|forecast_ar2");
  c_ex->add_option("--seed", ex.seed, "Seed")->required();
  c_ex->add_option("--outdir", ex.outdir, "Output directory")->required();
  c_ex->add_option("--epochs", ex.epochs, "Override training epochs");
  c_ex->add_option("--lambda", ex.lambda, "Override the gate penalty");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "Gate-penalty sweep: MI and effective dimension per lambda");
  c_sw->add_option("--task", sw.task, "Task");
  c_sw->add_option("--lambdas", sw.lambdas, "Penalty weights")->delimiter(',');
  c_sw->add_option("--taus", sw.taus, "Information floors in nats")->delimiter(',');
  c_sw->add_option("--seeds", sw.seeds, "Seeds")->delimiter(',');
  c_sw->add_option("--mc", sw.mc, "Monte Carlo sequences for MI");
  c_sw->add_option("--epochs", sw.epochs, "Override training epochs");
  c_sw->add_option("--out", sw.out, "CSV path (stdout if omitted)");

  std::vector<std::string> report_paths;
  std::string report_csv;
  auto* c_rep = app.add_subcommand("report", "Comparison table from experiment directories or summary files");
  c_rep->add_option("paths", report_paths, "Experiment directories or summary.json files")->required();
  c_rep->add_option("--csv", report_csv, "Also write the table as CSV");

  if (!args.empty() && !args.front().empty() && args.front()[0] != '-') {
    const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
    const bool known = std::any_of(subs.begin(), subs.end(), [&](const CLI::App* s) { return s->get_name() == args.front(); });
    if (!known) {
      err << "error: UnknownSubcommand: '" << args.front() << "'\n";
      return kExitUsage;
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (c_sim->parsed()) return do_simulate(sim, out);
    if (c_cer->parsed()) return do_certify(cer, out);
    if (c_mi->parsed()) return do_mi(mi, out);
    if (c_rd->parsed()) return do_rd(rd, out);
    if (c_fa->parsed()) return do_fano(fa, out);
    if (c_tr->parsed()) return do_train(tr, out);
    if (c_be->parsed()) return do_bench(be, out);
    if (c_ex->parsed()) return do_experiment(ex, out);
    if (c_sw->parsed()) return do_sweep(sw, out);
    if (c_rep->parsed()) return do_report(report_paths, report_csv, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_validation(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace ssmlab::cli
