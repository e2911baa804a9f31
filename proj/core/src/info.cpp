#include "ssmlab/info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ssmlab/error.hpp"
#include "ssmlab/rng.hpp"

namespace ssmlab {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Σ ← M Σ Mᵀ + Q with M = diag(g)·A (Pure) or diag(g)·A + I − diag(g) (Retentive).
Mat gated_transition(const Mat& a, std::span<const double> g, UpdateForm form) {
  Mat m = a;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (double& v : m.row(i)) v *= g[i];
    if (form == UpdateForm::Retentive) m(i, i) += 1.0 - g[i];
  }
  return m;
}

void require_spd(const Mat& m, const char* what) {
  try {
    (void)cholesky(m);
  } catch (const Error& e) {
    throw Error(Errc::NotPositiveDefinite, std::string(what) + " (" + e.what() + ")");
  }
}

}  // namespace

double gaussian_entropy(const Mat& cov) {
  const double d = static_cast<double>(cov.rows());
  return 0.5 * d * std::log(2.0 * std::numbers::pi * std::numbers::e) + 0.5 * cholesky_logdet(cov);
}

MiEstimate state_mi_linear(const SsmParams& p, const Mat& input_cov, const Mat& h0_cov, std::size_t t) {
  p.validate();
  if (t == 0) throw Error(Errc::InvalidConfig, "state_mi_linear: t must be >= 1");
  require_spd(p.q, "process noise covariance Q must be positive definite for a finite conditional entropy");
  const Mat drive = matmul(matmul(p.b, input_cov), transpose(p.b));
  Mat marginal = h0_cov;
  Mat conditional = h0_cov;
  for (std::size_t s = 0; s < t; ++s) {
    marginal = lyapunov_step(marginal, p.a, add(p.q, drive));
    conditional = lyapunov_step(conditional, p.a, p.q);
  }
  MiEstimate out;
  out.kind = MiKind::ClosedForm;
  out.value = 0.5 * (cholesky_logdet(marginal) - cholesky_logdet(conditional));
  if (out.value < 0.0) {
    out.value = 0.0;
    out.clamped = true;
  }
  return out;
}

MiEstimate state_mi_gated(const SsmParams& p, const GateParams& gp, UpdateForm form, const Mat& input_cov,
                          std::size_t t, std::size_t n_mc, std::uint64_t seed) {
  p.validate();
  gp.validate();
  if (gp.mode != GateMode::InputOnly)
    throw Error(Errc::ModeUnsupported, "state_mi_gated needs InputOnly gates so that h_t | x_{1:t} stays Gaussian");
  if (t == 0 || n_mc < 2) throw Error(Errc::InvalidConfig, "state_mi_gated: need t >= 1 and n_mc >= 2");
  require_spd(p.q, "process noise covariance Q must be positive definite for a finite conditional entropy");

  const std::size_t d = p.state_dim();
  const std::size_t m = p.input_dim();
  const Mat in_factor = psd_factor(input_cov);
  const std::size_t groups = std::min<std::size_t>(20, n_mc);

  struct Acc {
    double n = 0.0;
    double h_cond = 0.0;
    Vec mean_sum;
    Mat second_sum;
  };
  std::vector<Acc> acc(groups, Acc{0.0, 0.0, Vec(d, 0.0), Mat(d, d)});

  for (std::size_t s = 0; s < n_mc; ++s) {
    CounterRng rng(seed, Stream::Inputs, s);
    Vec mu(d, 0.0);
    Mat sigma(d, d);
    Vec z(m);
    for (std::size_t k = 0; k < t; ++k) {
      for (double& v : z) v = rng.normal();
      const Vec x = matvec(in_factor, z);
      const Vec g = gate_eval(gp, x, mu);
      mu = gated_update(p, g, form, mu, x, {});
      sigma = lyapunov_step(sigma, gated_transition(p.a, g, form), p.q);
    }
    Acc& a = acc[s % groups];
    a.n += 1.0;
    a.h_cond += gaussian_entropy(sigma);
    for (std::size_t i = 0; i < d; ++i) {
      a.mean_sum[i] += mu[i];
      for (std::size_t j = 0; j < d; ++j) a.second_sum(i, j) += sigma(i, j) + mu[i] * mu[j];
    }
  }

  auto estimate = [&](std::size_t skip) {
    double n = 0.0, h_cond = 0.0;
    Vec mean(d, 0.0);
    Mat second(d, d);
    for (std::size_t g = 0; g < groups; ++g) {
      if (g == skip) continue;
      n += acc[g].n;
      h_cond += acc[g].h_cond;
      for (std::size_t i = 0; i < d; ++i) mean[i] += acc[g].mean_sum[i];
      second = add(second, acc[g].second_sum);
    }
    for (double& v : mean) v /= n;
    Mat cov = scale(second, 1.0 / n);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) -= mean[i] * mean[j];
    return gaussian_entropy(symmetrize(cov)) - h_cond / n;
  };

  const double full = estimate(groups);
  double se = 0.0;
  if (groups > 1) {
    std::vector<double> loo(groups);
    double mean_loo = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      loo[g] = estimate(g);
      mean_loo += loo[g];
    }
    mean_loo /= static_cast<double>(groups);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
    se = std::sqrt(ss * static_cast<double>(groups - 1) / static_cast<double>(groups));
  }

  MiEstimate out;
  out.kind = MiKind::MomentMatchedUpperBound;
  out.value = full;
  out.std_err = se;
  if (out.value < 0.0) {
    out.value = 0.0;
    out.clamped = true;
  }
  return out;
}

RdCurve rd_gaussian(const Mat& cov, std::span<const double> distortions) {
  require_spd(cov, "rd_gaussian: covariance must be positive definite");
  const SymEigen eig = sym_eigen(cov);
  const Vec& lambda = eig.values;
  // the trace is exact where the eigenvalue sum carries rounding; the grid endpoint uses it too
  double total = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) total += cov(i, i);
  const double lmax = lambda.front();

  std::vector<double> ds(distortions.begin(), distortions.end());
  std::sort(ds.begin(), ds.end());

  RdCurve curve;
  curve.total_variance = total;
  curve.points.reserve(ds.size());
  for (double dist : ds) {
    if (!(dist > 0.0)) throw Error(Errc::DistortionOutOfRange, "distortion must be > 0, got " + std::to_string(dist));
    if (dist >= total) {
      curve.points.push_back({dist, 0.0});
      continue;
    }
    double lo = 0.0, hi = lmax;
    for (int it = 0; it < 400 && hi - lo > 1e-16 * std::max(lmax, 1.0); ++it) {
      const double mid = 0.5 * (lo + hi);
      double used = 0.0;
      for (double l : lambda) used += std::min(mid, l);
      (used < dist ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    double rate = 0.0;
    for (double l : lambda)
      if (l > theta) rate += 0.5 * std::log(l / theta);
    curve.points.push_back({dist, rate});
  }
  return curve;
}

RdCurve rd_gaussian_grid(const Mat& cov, std::size_t points, double min_fraction) {
  if (points < 2) throw Error(Errc::InvalidConfig, "rd_gaussian_grid needs at least 2 points");
  double total = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) total += cov(i, i);
  std::vector<double> ds(points);
  const double lo = std::log(min_fraction * total);
  const double hi = std::log(total);
  for (std::size_t k = 0; k < points; ++k)
    ds[k] = std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1));
  ds.back() = total;
  return rd_gaussian(cov, ds);
}

BlahutArimotoResult blahut_arimoto(std::span<const double> source_pmf, const Mat& distortion, double beta,
                                   double tol, std::size_t max_iter) {
  const std::size_t ns = source_pmf.size();
  if (distortion.rows() != ns) throw Error(Errc::DimensionMismatch, "distortion rows must match source alphabet");
  const std::size_t nr = distortion.cols();
  double mass = 0.0;
  for (double p : source_pmf) {
    if (p < 0.0) throw Error(Errc::InvalidConfig, "source pmf has a negative entry");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-12) throw Error(Errc::InvalidConfig, "source pmf must sum to 1");
  for (double v : distortion.data())
    if (v < 0.0) throw Error(Errc::InvalidConfig, "distortion entries must be >= 0");
  if (beta < 0.0) throw Error(Errc::InvalidConfig, "beta must be >= 0");

  if (beta == 0.0) {
    // zero-rate endpoint: one fixed reproduction symbol for every source symbol
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nr; ++j) {
      double e = 0.0;
      for (std::size_t i = 0; i < ns; ++i) e += source_pmf[i] * distortion(i, j);
      best = std::min(best, e);
    }
    return {0.0, best, 0};
  }

  const double ninf = -std::numeric_limits<double>::infinity();
  Vec log_q(nr, -std::log(static_cast<double>(nr)));
  Mat log_cond(ns, nr);
  double log_partition = 0.0;  // Σ_i p_i log Σ_j q_j e^{-β d_ij}
  BlahutArimotoResult res;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    log_partition = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      double mx = ninf;
      for (std::size_t j = 0; j < nr; ++j) {
        log_cond(i, j) = log_q[j] - beta * distortion(i, j);
        mx = std::max(mx, log_cond(i, j));
      }
      double s = 0.0;
      for (std::size_t j = 0; j < nr; ++j) s += std::exp(log_cond(i, j) - mx);
      const double lse = mx + std::log(s);
      for (std::size_t j = 0; j < nr; ++j) log_cond(i, j) -= lse;
      if (source_pmf[i] > 0.0) log_partition += source_pmf[i] * lse;
    }
    Vec q(nr, 0.0);
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t j = 0; j < nr; ++j) q[j] += source_pmf[i] * std::exp(log_cond(i, j));
    // max_j log c_j with c_j = q_new / q_old enters the lower bound
    double max_log_c = ninf;
    for (std::size_t j = 0; j < nr; ++j) {
      const double lq = q[j] > 0.0 ? std::log(q[j]) : ninf;
      if (lq != ninf && log_q[j] != ninf) max_log_c = std::max(max_log_c, lq - log_q[j]);
      log_q[j] = lq;
    }

    double rate = 0.0, dist = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      if (source_pmf[i] == 0.0) continue;
      for (std::size_t j = 0; j < nr; ++j) {
        const double lc = log_cond(i, j);
        if (lc == ninf) continue;
        const double c = std::exp(lc);
        if (c == 0.0) continue;
        rate += source_pmf[i] * c * (lc - log_q[j]);
        dist += source_pmf[i] * c * distortion(i, j);
      }
    }
    res = {std::max(rate, 0.0), dist, it};
    // the current rate is an upper bound on R(dist); this is a lower bound
    const double lower = -beta * dist - log_partition - max_log_c;
    if (rate - lower < tol) return res;
  }
  throw Error(Errc::NoConvergence, "blahut_arimoto did not converge in " + std::to_string(max_iter) + " iterations");
}

double fano_bound_bits(double h_cond_bits, std::size_t alphabet_size) {
  if (alphabet_size < 2) throw Error(Errc::InvalidConfig, "Fano bound needs an alphabet of at least 2 symbols");
  const double bound = (h_cond_bits - 1.0) / std::log2(static_cast<double>(alphabet_size));
  return std::clamp(bound, 0.0, 1.0);
}

double fano_bound(double h_cond_nats, std::size_t alphabet_size) {
  return fano_bound_bits(h_cond_nats / kLn2, alphabet_size);
}

std::string to_string(Theorem1Reason r) {
  switch (r) {
    case Theorem1Reason::Holds: return "Holds";
    case Theorem1Reason::InsufficientInformation: return "InsufficientInformation";
    case Theorem1Reason::DistortionExceeded: return "DistortionExceeded";
  }
  return "Unknown";
}

double rd_inverse(const RdCurve& rd, double rate, double* slack) {
  const auto& pts = rd.points;
  if (pts.empty()) throw Error(Errc::RateNotOnCurve, "empty rate-distortion curve");
  if (rate > pts.front().rate)
    throw Error(Errc::RateNotOnCurve, "rate " + std::to_string(rate) + " exceeds curve maximum " +
                                          std::to_string(pts.front().rate));
  std::size_t k = 0;
  while (k < pts.size() && pts[k].rate > rate) ++k;
  if (k == pts.size())
    throw Error(Errc::RateNotOnCurve, "curve never drops to rate " + std::to_string(rate));
  if (slack) *slack = 0.0;
  if (k == 0 || pts[k].rate == rate) return pts[k].distortion;
  const RdPoint& a = pts[k - 1];
  const RdPoint& b = pts[k];
  if (slack) *slack = b.distortion - a.distortion;
  const double frac = (a.rate - rate) / (a.rate - b.rate);
  return a.distortion + frac * (b.distortion - a.distortion);
}

Theorem1Verdict theorem1_check(const MiEstimate& mi, double i_min, const RdCurve& rd, double observed_distortion) {
  Theorem1Verdict v;
  v.d_max = rd_inverse(rd, i_min, &v.interpolation_slack);
  if (mi.value < i_min) {
    v.holds = false;
    v.reason = Theorem1Reason::InsufficientInformation;
  } else if (observed_distortion > v.d_max + v.interpolation_slack) {
    v.holds = false;
    v.reason = Theorem1Reason::DistortionExceeded;
  } else {
    v.holds = true;
    v.reason = Theorem1Reason::Holds;
  }
  return v;
}

double conditional_entropy_bits(const Mat& counts) {
  double total = 0.0;
  for (double c : counts.data()) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (std::size_t y = 0; y < counts.cols(); ++y) {
    double col = 0.0;
    for (std::size_t x = 0; x < counts.rows(); ++x) col += counts(x, y);
    if (col <= 0.0) continue;
    for (std::size_t x = 0; x < counts.rows(); ++x) {
      const double c = counts(x, y);
      if (c > 0.0) h -= (c / total) * std::log2(c / col);
    }
  }
  return h;
}

}  // namespace ssmlab
