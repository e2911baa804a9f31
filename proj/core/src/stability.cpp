#include "ssmlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssmlab/error.hpp"
#include "ssmlab/rng.hpp"

namespace ssmlab {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

ContractionReport check_preconditions(const SsmParams& p, const GateParams& gp, UpdateForm form) {
  ContractionReport r;
  r.rho = spectral_norm_value(p.a);
  r.l_g = lipschitz_bound_analytic(gp).l_g;
  r.kappa = r.rho * r.l_g;
  r.precondition_met = r.kappa < 1.0;
  r.mode = gp.mode;
  r.form = form;
  return r;
}

Mat step_jacobian(const SsmParams& p, const GateParams& gp, UpdateForm form, std::span<const double> x,
                  std::span<const double> h) {
  const std::size_t d = p.state_dim();
  const Vec z = gate_preactivation(gp, x, h);
  Mat jac(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    const double g = activate(gp.activation, z[i]);
    const auto ar = p.a.row(i);
    auto jr = jac.row(i);
    for (std::size_t j = 0; j < d; ++j) jr[j] = g * ar[j];
    if (form == UpdateForm::Retentive) jr[i] += 1.0 - g;
    if (gp.mode == GateMode::InputAndState) {
      // d/dh of g_i·u_i (− g_i·h_i): (u_i − h_i)·g_i'·U_i
      double coeff = drive_row(p, i, h, x);
      if (form == UpdateForm::Retentive) coeff -= h[i];
      coeff *= activate_derivative(gp.activation, z[i]);
      const auto ur = gp.u.row(i);
      for (std::size_t j = 0; j < d; ++j) jr[j] += coeff * ur[j];
    }
  }
  return jac;
}

double step_jacobian_norm(const SsmParams& p, const GateParams& gp, UpdateForm form, std::span<const double> x,
                          std::span<const double> h) {
  return spectral_norm(step_jacobian(p, gp, form, x, h), 1e-14, 5000).value;
}

// Below this fraction of the state norm the computed gap is dominated by rounding.
constexpr double kResolvedGap = 1e-8;

CoupledRun coupled_contraction_test(const SsmParams& p, const GateParams& gp, UpdateForm form, const Mat& inputs,
                                    std::span<const double> h0, std::span<const double> h0_alt,
                                    std::uint64_t seed, bool noise) {
  p.validate();
  const std::size_t d = p.state_dim();
  if (h0.size() != d || h0_alt.size() != d)
    throw Error(Errc::DimensionMismatch, "coupled_contraction_test: start states must have length d");
  const Mat q_factor = noise ? psd_factor(p.q) : Mat();

  CoupledRun run;
  Vec h(h0.begin(), h0.end());
  Vec h_alt(h0_alt.begin(), h0_alt.end());
  double gap = distance(h, h_alt);
  run.gaps.push_back(gap);
  Vec w;
  for (std::size_t t = 0; t < inputs.rows(); ++t) {
    const auto x = inputs.row(t);
    if (noise) w = correlated_normal(q_factor, seed, Stream::ProcessNoise, t);

    double seg = 0.0;
    if (!run.merged) {
      // the Jacobian is state independent for InputOnly gates
      const std::size_t pts = gp.mode == GateMode::InputOnly ? 1 : std::clamp<std::size_t>(
                                                                       static_cast<std::size_t>(gap * 16.0) + 3, 3, 33);
      Vec mid(d);
      for (std::size_t k = 0; k < pts; ++k) {
        const double s = pts == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(pts - 1);
        for (std::size_t i = 0; i < d; ++i) mid[i] = h[i] + s * (h_alt[i] - h[i]);
        seg = std::max(seg, step_jacobian_norm(p, gp, form, x, mid));
      }
    }
    run.segment_jacobian.push_back(seg);

    const double scale = std::max(norm2(h), norm2(h_alt));
    h = gated_step(p, gp, form, h, x, w).h;
    h_alt = gated_step(p, gp, form, h_alt, x, w).h;
    if (!all_finite(h) || !all_finite(h_alt))
      throw Error(Errc::NonFiniteState, "coupled trajectories overflowed at step " + std::to_string(t));
    const double next_gap = distance(h, h_alt);
    if (run.merged || gap <= kResolvedGap * scale || gap < 1e-300) {
      run.merged = true;
      run.ratios.push_back(0.0);
    } else {
      run.ratios.push_back(next_gap / gap);
    }
    gap = next_gap;
    run.gaps.push_back(gap);
  }
  return run;
}

ContractionReport certify(const SsmParams& p, const GateParams& gp, UpdateForm form, const CertifyOptions& opt) {
  ContractionReport report = check_preconditions(p, gp, form);
  const std::size_t d = p.state_dim();
  const std::size_t m = p.input_dim();
  for (std::size_t run_idx = 0; run_idx < opt.n_runs; ++run_idx) {
    CounterRng rng(opt.seed, Stream::Sampling, run_idx);
    Mat inputs(opt.steps, m);
    for (double& v : inputs.data()) v = opt.input_scale * rng.normal();
    Vec h0(d), h1(d);
    for (double& v : h0) v = opt.state_scale * rng.normal();
    for (double& v : h1) v = opt.state_scale * rng.normal();
    const CoupledRun run =
        coupled_contraction_test(p, gp, form, inputs, h0, h1, opt.seed + run_idx, default_noise(form));
    if (run_idx == 0) report.empirical_ratios = run.ratios;
    for (std::size_t t = 0; t < run.ratios.size(); ++t) {
      report.max_empirical_ratio = std::max(report.max_empirical_ratio, run.ratios[t]);
      report.tight_kappa = std::max(report.tight_kappa, run.segment_jacobian[t]);
    }
  }
  return report;
}

Mat fixed_gate_transition(const SsmParams& p, std::span<const double> g, UpdateForm form) {
  if (g.size() != p.state_dim()) throw Error(Errc::DimensionMismatch, "gate length must equal d");
  Mat m = p.a;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (double& v : m.row(i)) v *= g[i];
    if (form == UpdateForm::Retentive) m(i, i) += 1.0 - g[i];
  }
  return m;
}

Mat stationary_covariance(const SsmParams& p, std::span<const double> g, UpdateForm form, double tol,
                          std::size_t max_iter) {
  p.validate();
  const Mat m = fixed_gate_transition(p, g, form);
  const double norm = spectral_norm_value(m);
  if (norm >= 1.0)
    throw Error(Errc::Unstable, "fixed-gate transition has spectral norm " + std::to_string(norm) + " >= 1");
  Mat sigma = p.q;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Mat next = lyapunov_step(sigma, m, p.q);
    const double change = frobenius_norm(sub(next, sigma));
    sigma = std::move(next);
    if (change < tol) return sigma;
  }
  throw Error(Errc::NoConvergence, "stationary covariance iteration did not settle");
}

FixedPointResult fixed_point_test(const SsmParams& p, const GateParams* gp, UpdateForm form,
                                  std::span<const double> x_const, const std::vector<Vec>& starts, double tol,
                                  std::size_t max_iter) {
  p.validate();
  if (starts.empty()) throw Error(Errc::InvalidConfig, "fixed_point_test needs at least one start");
  const std::size_t d = p.state_dim();
  auto step = [&](const Vec& h) { return gp ? gated_step(p, *gp, form, h, x_const, {}).h : dense_step(p, h, x_const, {}); };
  FixedPointResult out;
  std::vector<Vec> ends;
  for (const Vec& start : starts) {
    Vec h = start;
    bool done = false;
    std::size_t it = 0;
    double prev_step = std::numeric_limits<double>::infinity();
    while (it < max_iter && !done) {
      ++it;
      Vec next = step(h);
      if (!all_finite(next)) throw Error(Errc::NoConvergence, "iteration diverged to a non-finite state");
      const double moved = distance(next, h);
      // a-posteriori error c/(1-c)·moved with c estimated from consecutive steps;
      // moves at rounding level end the iteration regardless
      const double c = moved / prev_step;
      const double size = norm2(next);
      const bool floor = moved <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, size);
      done = std::isfinite(moved) && std::isfinite(size) && (floor || (moved < tol && c < 1.0 && moved * c / (1.0 - c) < 0.5 * tol));
      prev_step = moved;
      h = std::move(next);
    }
    if (!done)
      throw Error(Errc::NoConvergence, "no fixed point within " + std::to_string(max_iter) + " iterations");
    // Slow modes leave an error near eps/(1-c) that iteration cannot remove; Newton steps on
    // h - F(h) take it to rounding level.
    for (int k = 0; k < 3; ++k) {
      const Vec fh = step(h);
      Vec resid(d);
      for (std::size_t i = 0; i < d; ++i) resid[i] = fh[i] - h[i];
      Mat sys = gp ? step_jacobian(p, *gp, form, x_const, h) : p.a;
      for (double& v : sys.data()) v = -v;
      for (std::size_t i = 0; i < d; ++i) sys(i, i) += 1.0;
      Vec cand = h;
      const Vec delta = lu_solve(std::move(sys), resid);
      if (!(norm2(delta) <= 1.5e-8 * std::max(1.0, norm2(h)))) break;
      for (std::size_t i = 0; i < d; ++i) cand[i] += delta[i];
      if (!(distance(step(cand), cand) < norm2(resid))) break;
      h = std::move(cand);
    }
    out.iterations = std::max(out.iterations, it);
    ends.push_back(std::move(h));
  }
  for (const Vec& e : ends) {
    const double gap = distance(e, ends.front());
    if (gap > 10.0 * tol)
      throw Error(Errc::MultipleFixedPoints,
                  "endpoints from different starts differ by " + std::to_string(gap));
  }
  out.fixed_point = ends.front();
  out.converged = true;
  return out;
}

}  // namespace ssmlab
