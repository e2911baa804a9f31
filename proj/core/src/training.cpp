#include "ssmlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ssmlab/error.hpp"
#include "ssmlab/gating.hpp"
#include "ssmlab/rng.hpp"

namespace ssmlab {

namespace {

constexpr double kDivergedLoss = 1e6;
constexpr double kSaturatedPreact = 30.0;

struct ParamView {
  const char* name;
  Mat* mat;
  Vec* vec;
  ParamId id;

  std::span<double> values() const { return mat ? mat->data() : std::span<double>(*vec); }
  std::size_t cols() const { return mat ? mat->cols() : 1; }
};

std::vector<ParamView> model_views(Model& m) {
  std::vector<ParamView> v{{"a", &m.params.a, nullptr, ParamId::A},
                           {"b", &m.params.b, nullptr, ParamId::B},
                           {"c", &m.params.c, nullptr, ParamId::C}};
  if (m.gate) {
    v.push_back({"w", &m.gate->w, nullptr, ParamId::W});
    v.push_back({"u", &m.gate->u, nullptr, ParamId::U});
    v.push_back({"bias", nullptr, &m.gate->bias, ParamId::Bias});
  }
  return v;
}

std::vector<ParamView> grad_views(GradientSet& g, bool gated) {
  std::vector<ParamView> v{{"a", &g.d_a, nullptr, ParamId::A},
                           {"b", &g.d_b, nullptr, ParamId::B},
                           {"c", &g.d_c, nullptr, ParamId::C}};
  if (gated) {
    v.push_back({"w", &g.d_w, nullptr, ParamId::W});
    v.push_back({"u", &g.d_u, nullptr, ParamId::U});
    v.push_back({"bias", nullptr, &g.d_bias, ParamId::Bias});
  }
  return v;
}

GradientSet zero_grads(const Model& m) {
  const std::size_t d = m.params.state_dim();
  GradientSet g{Mat(d, d), Mat(d, m.params.input_dim()), Mat(m.params.output_dim(), d), Mat(), Mat(), Vec()};
  if (m.gate) {
    g.d_w = Mat(d, m.gate->input_dim());
    g.d_u = Mat(d, d);
    g.d_bias.assign(d, 0.0);
  }
  return g;
}

void check_batch(const Model& model, const std::vector<Sequence>& batch) {
  const std::size_t m = model.params.input_dim();
  const std::size_t n = model.params.output_dim();
  for (const Sequence& s : batch) {
    if (s.inputs.cols() != m || s.targets.cols() != n || s.targets.rows() != s.inputs.rows() ||
        (!s.mask.empty() && s.mask.size() != s.inputs.rows()))
      throw Error(Errc::DimensionMismatch, "sequence shapes do not match the model");
  }
}

double mask_at(const Sequence& s, std::size_t t) { return s.mask.empty() ? 1.0 : s.mask[t]; }

// Noise-free rollout recording everything BPTT needs.
SequenceCache rollout(const Model& model, const Sequence& seq, std::size_t steps) {
  const SsmParams& p = model.params;
  const std::size_t d = p.state_dim();
  SequenceCache c{Mat(steps + 1, d), Mat(steps, d, 1.0), Mat(steps, d), Mat(steps, d), Mat(steps, p.output_dim())};
  Vec h(d, 0.0);
  Vec next(d);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto x = seq.inputs.row(t);
    auto g = c.gates.row(t);
    auto u = c.drive.row(t);
    if (model.gate) {
      const Vec z = gate_preactivation(*model.gate, x, h);
      std::copy(z.begin(), z.end(), c.preact.row(t).begin());
      for (std::size_t i = 0; i < d; ++i) g[i] = activate(model.gate->activation, z[i]);
    }
    for (std::size_t i = 0; i < d; ++i) {
      u[i] = drive_row(p, i, h, x);
      if (model.gate) {
        double v = g[i] * u[i];
        if (model.form == UpdateForm::Retentive) v = v + (1.0 - g[i]) * h[i];
        next[i] = v;
      } else {
        next[i] = u[i];
      }
    }
    h.swap(next);
    std::copy(h.begin(), h.end(), c.states.row(t + 1).begin());
    const Vec y = matvec(p.c, h);
    std::copy(y.begin(), y.end(), c.outputs.row(t).begin());
  }
  return c;
}

std::size_t steps_for(const Sequence& s, std::size_t horizon) {
  return horizon == 0 ? s.inputs.rows() : std::min(horizon, s.inputs.rows());
}

}  // namespace

void LossConfig::validate() const {
  if (!std::isfinite(lambda_gate) || lambda_gate < 0.0)
    throw Error(Errc::InvalidConfig, "lambda_gate must be finite and non-negative");
}

double GradientSet::global_norm() const {
  double s = 0.0;
  for (const Mat* m : {&d_a, &d_b, &d_c, &d_w, &d_u})
    for (double v : m->data()) s += v * v;
  for (double v : d_bias) s += v * v;
  return std::sqrt(s);
}

void GradientSet::scale(double s) {
  for (Mat* m : {&d_a, &d_b, &d_c, &d_w, &d_u})
    for (double& v : m->data()) v *= s;
  for (double& v : d_bias) v *= s;
}

ForwardResult forward_loss(const Model& model, const std::vector<Sequence>& batch, const LossConfig& cfg) {
  cfg.validate();
  model.validate();
  check_batch(model, batch);
  ForwardResult res;
  ForwardCache& cache = res.cache;
  cache.model = model;
  cache.batch = &batch;
  cache.horizon = cfg.horizon;
  cache.seqs.reserve(batch.size());
  double err = 0.0;
  for (const Sequence& seq : batch) {
    const std::size_t steps = steps_for(seq, cfg.horizon);
    SequenceCache sc = rollout(model, seq, steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const double w = mask_at(seq, t);
      if (w == 0.0) continue;
      const auto y = sc.outputs.row(t);
      const auto z = seq.targets.row(t);
      double e = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) e += (y[k] - z[k]) * (y[k] - z[k]);
      err += w * e;
      cache.mask_weight += w;
    }
    if (model.gate) {
      cache.gate_penalty += l1_gate_penalty(sc.gates);
      for (double z : sc.preact.data()) cache.max_abs_preact = std::max(cache.max_abs_preact, std::abs(z));
    }
    cache.seqs.push_back(std::move(sc));
  }
  if (!batch.empty()) cache.gate_penalty /= static_cast<double>(batch.size());
  cache.task_loss = cache.mask_weight > 0.0 ? err / cache.mask_weight : 0.0;
  res.loss = cache.task_loss + cfg.lambda_gate * cache.gate_penalty;
  if (!std::isfinite(res.loss)) throw Error(Errc::NonFiniteLoss, "loss is not finite");
  return res;
}

GradientSet bptt_grads(const ForwardCache& cache, const LossConfig& cfg) {
  const Model& model = cache.model;
  const SsmParams& p = model.params;
  const GateParams* gp = model.gate ? &*model.gate : nullptr;
  const bool retentive = model.form == UpdateForm::Retentive;
  const bool state_gate = gp && gp->mode == GateMode::InputAndState;
  const std::size_t d = p.state_dim();
  const std::size_t n = p.output_dim();
  GradientSet grad = zero_grads(model);
  if (cache.batch == nullptr || cache.seqs.empty()) return grad;
  const std::vector<Sequence>& batch = *cache.batch;
  const double out_scale = cache.mask_weight > 0.0 ? 2.0 / cache.mask_weight : 0.0;

  Vec dh(d), dh_prev(d), du(d), dz(d), dy(n);
  for (std::size_t s = 0; s < cache.seqs.size(); ++s) {
    const Sequence& seq = batch[s];
    const SequenceCache& sc = cache.seqs[s];
    const std::size_t steps = sc.gates.rows();
    const double pen = steps == 0 ? 0.0
                                  : cfg.lambda_gate / (static_cast<double>(cache.seqs.size()) *
                                                       static_cast<double>(steps));
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t t = steps; t-- > 0;) {
      const auto x = seq.inputs.row(t);
      const auto h = sc.states.row(t + 1);
      const auto h_prev = sc.states.row(t);
      const auto g = sc.gates.row(t);
      const auto u = sc.drive.row(t);

      const double w = mask_at(seq, t);
      if (w != 0.0) {
        const auto y = sc.outputs.row(t);
        const auto tgt = seq.targets.row(t);
        for (std::size_t k = 0; k < n; ++k) dy[k] = out_scale * w * (y[k] - tgt[k]);
        for (std::size_t k = 0; k < n; ++k) {
          auto dc = grad.d_c.row(k);
          const auto cr = p.c.row(k);
          for (std::size_t i = 0; i < d; ++i) {
            dc[i] += dy[k] * h[i];
            dh[i] += cr[i] * dy[k];
          }
        }
      }

      if (gp) {
        for (std::size_t i = 0; i < d; ++i) {
          du[i] = g[i] * dh[i];
          double dg = dh[i] * (retentive ? u[i] - h_prev[i] : u[i]);
          if (g[i] > 0.0) dg += pen;
          dz[i] = dg * activate_derivative(gp->activation, sc.preact(t, i));
        }
      } else {
        std::copy(dh.begin(), dh.end(), du.begin());
      }

      for (std::size_t i = 0; i < d; ++i) {
        dh_prev[i] = (gp && retentive) ? (1.0 - g[i]) * dh[i] : 0.0;
      }
      for (std::size_t i = 0; i < d; ++i) {
        auto da = grad.d_a.row(i);
        auto db = grad.d_b.row(i);
        const auto ar = p.a.row(i);
        for (std::size_t j = 0; j < d; ++j) {
          da[j] += du[i] * h_prev[j];
          dh_prev[j] += ar[j] * du[i];
        }
        for (std::size_t k = 0; k < x.size(); ++k) db[k] += du[i] * x[k];
        if (gp) {
          auto dw = grad.d_w.row(i);
          for (std::size_t k = 0; k < x.size(); ++k) dw[k] += dz[i] * x[k];
          grad.d_bias[i] += dz[i];
          if (state_gate) {
            auto dU = grad.d_u.row(i);
            const auto ur = gp->u.row(i);
            for (std::size_t j = 0; j < d; ++j) {
              dU[j] += dz[i] * h_prev[j];
              dh_prev[j] += ur[j] * dz[i];
            }
          }
        }
      }
      dh.swap(dh_prev);
    }
  }
  return grad;
}

FiniteDiffReport finite_diff_check(const Model& model, const std::vector<Sequence>& batch, const LossConfig& cfg,
                                   double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) throw Error(Errc::InvalidConfig, "epsilon must lie in [1e-7, 1e-3]");
  FiniteDiffReport rep;
  const ForwardResult base = forward_loss(model, batch, cfg);
  rep.saturated = base.cache.max_abs_preact > kSaturatedPreact;
  GradientSet analytic = bptt_grads(base.cache, cfg);

  Model probe = model;
  const auto params = model_views(probe);
  const auto grads = grad_views(analytic, model.gate.has_value());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto vals = params[k].values();
    const auto an = grads[k].values();
    for (std::size_t e = 0; e < vals.size(); ++e) {
      const double orig = vals[e];
      vals[e] = orig + epsilon;
      const double lp = forward_loss(probe, batch, cfg).loss;
      vals[e] = orig - epsilon;
      const double lm = forward_loss(probe, batch, cfg).loss;
      vals[e] = orig;
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double rel = std::abs(an[e] - numeric) / std::max({1.0, std::abs(an[e]), std::abs(numeric)});
      ++rep.entries;
      if (rel > rep.max_rel_error || rep.entries == 1) {
        rep.max_rel_error = rel;
        std::ostringstream os;
        os << params[k].name << '[' << e / params[k].cols() << ',' << e % params[k].cols() << ']';
        rep.worst_parameter = os.str();
      }
    }
  }
  return rep;
}

std::string TrainLog::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,loss,gate_l1,eff_dim_mean\n";
  for (const TrainLogRow& r : rows) os << r.epoch << ',' << r.loss << ',' << r.gate_l1 << ',' << r.eff_dim_mean << '\n';
  return os.str();
}

TrainLog sgd_train(Model& model, const Dataset& data, const TrainOptions& opt, const LossConfig& cfg) {
  if (!(opt.lr >= 0.0) || !std::isfinite(opt.lr)) throw Error(Errc::InvalidConfig, "lr must be non-negative");
  if (!(opt.momentum >= 0.0 && opt.momentum < 1.0)) throw Error(Errc::InvalidConfig, "momentum must lie in [0, 1)");
  cfg.validate();
  model.validate();
  const std::size_t n_seq = data.size();
  if (n_seq == 0) throw Error(Errc::InvalidConfig, "training set is empty");
  const std::size_t bs = opt.batch_size == 0 ? n_seq : std::min(opt.batch_size, n_seq);
  const bool gated = model.gate.has_value();

  auto is_frozen = [&](ParamId id) { return std::find(opt.frozen.begin(), opt.frozen.end(), id) != opt.frozen.end(); };

  GradientSet velocity = zero_grads(model);
  TrainLog log;
  std::vector<std::size_t> order(n_seq);
  std::vector<Sequence> batch;
  batch.reserve(bs);

  auto guarded_forward = [&](const std::vector<Sequence>& b) {
    try {
      ForwardResult r = forward_loss(model, b, cfg);
      if (r.loss > kDivergedLoss) throw Error(Errc::DivergedLoss, "loss exceeded 1e6");
      return r;
    } catch (const Error& e) {
      if (e.code() == Errc::NonFiniteLoss) throw Error(Errc::DivergedLoss, "loss became non-finite");
      throw;
    }
  };

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(opt.seed, Stream::Shuffle, epoch);
    for (std::size_t i = n_seq; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t start = 0; start < n_seq; start += bs) {
      batch.clear();
      for (std::size_t k = start; k < std::min(start + bs, n_seq); ++k) batch.push_back(data.sequences[order[k]]);
      const ForwardResult fr = guarded_forward(batch);
      GradientSet grad = bptt_grads(fr.cache, cfg);
      const double norm = grad.global_norm();
      if (opt.clip_norm > 0.0 && norm > opt.clip_norm) grad.scale(opt.clip_norm / norm);

      const auto params = model_views(model);
      const auto gv = grad_views(grad, gated);
      const auto vv = grad_views(velocity, gated);
      for (std::size_t k = 0; k < params.size(); ++k) {
        if (is_frozen(params[k].id)) continue;
        const auto theta = params[k].values();
        const auto g = gv[k].values();
        const auto v = vv[k].values();
        for (std::size_t e = 0; e < theta.size(); ++e) {
          v[e] = opt.momentum * v[e] - opt.lr * g[e];
          theta[e] += v[e];
        }
      }
    }

    const ForwardResult eval = guarded_forward(data.sequences);
    TrainLogRow row;
    row.epoch = epoch;
    row.loss = eval.loss;
    row.gate_l1 = eval.cache.gate_penalty;
    row.eff_dim_mean = gated ? eval.cache.gate_penalty : static_cast<double>(model.params.state_dim());
    log.rows.push_back(row);
  }
  return log;
}

Model init_model(const InitOptions& opt) {
  const std::size_t d = opt.state_dim;
  const std::size_t m = opt.input_dim;
  const std::size_t n = opt.output_dim;
  if (d == 0 || m == 0 || n == 0) throw Error(Errc::InvalidConfig, "model dimensions must be positive");
  CounterRng rng(opt.seed, Stream::Init, 0);

  // Gram–Schmidt on I + 0.1·R gives an orthogonal matrix close to the identity.
  Mat q = Mat::identity(d);
  for (double& v : q.data()) v += 0.1 * rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    auto ri = q.row(i);
    for (std::size_t j = 0; j < i; ++j) {
      const auto rj = q.row(j);
      const double proj = dot(ri, rj);
      for (std::size_t k = 0; k < d; ++k) ri[k] -= proj * rj[k];
    }
    const double nrm = norm2(ri);
    for (double& v : ri) v /= nrm;
  }

  Model model;
  model.form = opt.form;
  model.params.a = scale(q, 0.9);
  model.params.b = Mat(d, m);
  model.params.c = Mat(n, d);
  for (double& v : model.params.b.data()) v = rng.uniform(-0.1, 0.1);
  for (double& v : model.params.c.data()) v = rng.uniform(-0.1, 0.1);
  model.params.q = scale(Mat::identity(d), opt.noise_var);
  model.params.r = scale(Mat::identity(n), opt.noise_var);
  if (opt.gated) {
    GateParams gp;
    gp.w = Mat(d, m);
    gp.u = Mat(d, d);
    for (double& v : gp.w.data()) v = rng.uniform(-0.1, 0.1);
    if (opt.mode == GateMode::InputAndState)
      for (double& v : gp.u.data()) v = rng.uniform(-0.1, 0.1);
    gp.bias.assign(d, 1.0);
    gp.activation = opt.activation;
    gp.mode = opt.mode;
    model.gate = std::move(gp);
  }
  return model;
}

std::vector<Mat> predict(const Model& model, const std::vector<Sequence>& seqs) {
  std::vector<Mat> out;
  out.reserve(seqs.size());
  for (const Sequence& s : seqs) out.push_back(rollout(model, s, s.inputs.rows()).outputs);
  return out;
}

double mean_effective_dim(const Model& model, const std::vector<Sequence>& seqs) {
  if (!model.gate) return static_cast<double>(model.params.state_dim());
  double sum = 0.0;
  std::size_t count = 0;
  for (const Sequence& s : seqs) {
    const SequenceCache c = rollout(model, s, s.inputs.rows());
    for (std::size_t t = 0; t < c.gates.rows(); ++t) sum += effective_dim(c.gates.row(t));
    count += c.gates.rows();
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace ssmlab
