#include "ssmlab/ssm.hpp"

#include <string>

#include "ssmlab/error.hpp"

namespace ssmlab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::DimensionMismatch, what);
}

}  // namespace

void SsmParams::validate() const {
  const std::size_t d = a.rows();
  require(a.cols() == d, "A must be square");
  require(b.rows() == d, "B must have d rows");
  require(c.cols() == d, "C must have d columns");
  require(q.rows() == d && q.cols() == d, "Q must be d×d");
  require(r.rows() == c.rows() && r.cols() == c.rows(), "R must be n×n");
  if (!is_symmetric(q) || !is_symmetric(r)) throw Error(Errc::NotSymmetric, "noise covariances must be symmetric");
}

void Model::validate() const {
  params.validate();
  if (gate) {
    gate->validate();
    require(gate->state_dim() == params.state_dim(), "gate dimension must equal state dimension");
    require(gate->input_dim() == params.input_dim(), "gate input dimension must equal B columns");
  }
}

double drive_row(const SsmParams& p, std::size_t i, std::span<const double> h_prev,
                 std::span<const double> x) noexcept {
  const auto ar = p.a.row(i);
  const auto br = p.b.row(i);
  double ah = 0.0;
  for (std::size_t j = 0; j < ar.size(); ++j) ah += ar[j] * h_prev[j];
  double bx = 0.0;
  for (std::size_t k = 0; k < br.size(); ++k) bx += br[k] * x[k];
  return ah + bx;
}

Vec dense_step(const SsmParams& p, std::span<const double> h_prev, std::span<const double> x,
               std::span<const double> w) {
  const std::size_t d = p.state_dim();
  require(h_prev.size() == d, "dense_step: h_prev length must equal d");
  require(x.size() == p.input_dim(), "dense_step: x length must equal m");
  require(w.empty() || w.size() == d, "dense_step: w length must equal d");
  Vec h(d);
  for (std::size_t i = 0; i < d; ++i) {
    h[i] = drive_row(p, i, h_prev, x);
    if (!w.empty()) h[i] = h[i] + w[i];
  }
  return h;
}

Vec observe(const SsmParams& p, std::span<const double> h, std::span<const double> v) {
  require(h.size() == p.state_dim(), "observe: h length must equal d");
  require(v.empty() || v.size() == p.output_dim(), "observe: v length must equal n");
  Vec y = matvec(p.c, h);
  if (!v.empty())
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += v[i];
  return y;
}

std::pair<Mat, Mat> effective_matrices(std::span<const double> g, const SsmParams& p) {
  require(g.size() == p.state_dim(), "effective_matrices: gate length must equal d");
  Mat a = p.a;
  Mat b = p.b;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (double& v : a.row(i)) v *= g[i];
    for (double& v : b.row(i)) v *= g[i];
  }
  return {std::move(a), std::move(b)};
}

Vec gated_update(const SsmParams& p, std::span<const double> g, UpdateForm form, std::span<const double> h_prev,
                 std::span<const double> x, std::span<const double> w) {
  const std::size_t d = p.state_dim();
  require(g.size() == d, "gated_update: gate length must equal d");
  require(h_prev.size() == d, "gated_update: h_prev length must equal d");
  require(x.size() == p.input_dim(), "gated_update: x length must equal m");
  require(w.empty() || w.size() == d, "gated_update: w length must equal d");
  Vec h(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double u = drive_row(p, i, h_prev, x);
    double v = g[i] * u;
    if (form == UpdateForm::Retentive) v = v + (1.0 - g[i]) * h_prev[i];
    if (!w.empty()) v = v + w[i];
    h[i] = v;
  }
  return h;
}

GatedStep gated_step(const SsmParams& p, const GateParams& gp, UpdateForm form, std::span<const double> h_prev,
                     std::span<const double> x, std::span<const double> w) {
  Vec g = gate_eval(gp, x, h_prev);
  Vec h = gated_update(p, g, form, h_prev, x, w);
  return {std::move(h), std::move(g)};
}

Vec correlated_normal(const Mat& factor, std::uint64_t seed, Stream stream, std::uint64_t step) {
  const std::size_t n = factor.rows();
  Vec z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = counter_normal(seed, stream, step, i);
  Vec out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= i; ++k) acc += factor(i, k) * z[k];
    out[i] = acc;
  }
  return out;
}

Trajectory simulate(const SsmParams& p, const GateParams* gp, UpdateForm form, const Mat& inputs,
                    std::span<const double> h0, std::uint64_t seed, bool noise) {
  p.validate();
  const std::size_t d = p.state_dim();
  const std::size_t n = p.output_dim();
  const std::size_t steps = inputs.rows();
  if (steps == 0) throw Error(Errc::InvalidConfig, "simulate: need at least one step");
  require(inputs.cols() == p.input_dim(), "simulate: input width must equal m");
  require(h0.size() == d, "simulate: h0 length must equal d");
  if (gp) {
    gp->validate();
    require(gp->state_dim() == d && gp->input_dim() == p.input_dim(), "simulate: gate shape mismatch");
  }

  Mat q_factor, r_factor;
  if (noise) {
    q_factor = psd_factor(p.q);
    r_factor = psd_factor(p.r);
  }

  Trajectory traj{inputs, Mat(steps, d), Mat(steps, n), Mat(steps, d, 1.0), seed};
  Vec h(h0.begin(), h0.end());
  Vec w, v;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto x = inputs.row(t);
    if (noise) {
      w = correlated_normal(q_factor, seed, Stream::ProcessNoise, t);
      v = correlated_normal(r_factor, seed, Stream::ObservationNoise, t);
    }
    if (gp) {
      GatedStep step = gated_step(p, *gp, form, h, x, w);
      std::copy(step.g.begin(), step.g.end(), traj.gates.row(t).begin());
      h = std::move(step.h);
    } else {
      h = dense_step(p, h, x, w);
    }
    if (!all_finite(h))
      throw Error(Errc::NonFiniteState, "state overflowed at step " + std::to_string(t));
    std::copy(h.begin(), h.end(), traj.states.row(t).begin());
    const Vec y = observe(p, h, v);
    std::copy(y.begin(), y.end(), traj.outputs.row(t).begin());
  }
  return traj;
}

}  // namespace ssmlab
