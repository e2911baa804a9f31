#include "ssmlab/sparse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ssmlab/error.hpp"
#include "ssmlab/rng.hpp"

namespace ssmlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_step_shapes(const SsmParams& p, std::span<const double> g, std::span<const double> h_prev,
                       std::span<const double> x, std::span<const double> w, const ActiveSet& act) {
  const std::size_t d = p.state_dim();
  if (g.size() != d || h_prev.size() != d || x.size() != p.input_dim() || (!w.empty() && w.size() != d))
    throw Error(Errc::DimensionMismatch, "sparse step: vector lengths do not match the model");
  if (!act.indices.empty() && act.indices.back() >= d)
    throw Error(Errc::IndexOutOfRange, "active index beyond state dimension");
}

double input_row(const SsmParams& p, std::size_t i, std::span<const double> x) noexcept {
  const auto br = p.b.row(i);
  double bx = 0.0;
  for (std::size_t k = 0; k < br.size(); ++k) bx += br[k] * x[k];
  return bx;
}

}  // namespace

ActiveSet active_set(std::span<const double> g, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(Errc::OutOfRange, "gate threshold must lie in (0, 1)");
  ActiveSet act;
  act.threshold = tau;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] >= tau) act.indices.push_back(static_cast<std::uint32_t>(i));
  return act;
}

ActiveSet full_active_set(std::size_t d, double tau) {
  ActiveSet act;
  act.threshold = tau;
  act.indices.resize(d);
  std::iota(act.indices.begin(), act.indices.end(), 0u);
  return act;
}

Vec threshold_gates(std::span<const double> g, double tau) {
  Vec out(g.begin(), g.end());
  for (double& v : out)
    if (v < tau) v = 0.0;
  return out;
}

void sparse_step_rows_into(std::span<double> out, const SsmParams& p, std::span<const double> g,
                           const ActiveSet& act, std::span<const double> h_prev, std::span<const double> x,
                           std::span<const double> w) {
  const std::size_t d = h_prev.size();
  if (w.empty()) {
    std::copy(h_prev.begin(), h_prev.end(), out.begin());
  } else {
    for (std::size_t i = 0; i < d; ++i) out[i] = h_prev[i] + w[i];
  }
  for (const std::uint32_t i : act.indices) {
    const double u = drive_row(p, i, h_prev, x);
    double v = g[i] * u;
    v = v + (1.0 - g[i]) * h_prev[i];
    if (!w.empty()) v = v + w[i];
    out[i] = v;
  }
}

Vec sparse_step_rows(const SsmParams& p, std::span<const double> g, const ActiveSet& act,
                     std::span<const double> h_prev, std::span<const double> x, std::span<const double> w) {
  check_step_shapes(p, g, h_prev, x, w, act);
  Vec out(h_prev.size());
  sparse_step_rows_into(out, p, g, act, h_prev, x, w);
  return out;
}

BlockKernel::BlockKernel(const SsmParams& p) : p_(p), row_norm_sq_(p.state_dim(), 0.0) {
  for (std::size_t i = 0; i < p_.state_dim(); ++i)
    for (double v : p_.a.row(i)) row_norm_sq_[i] += v * v;
}

void BlockKernel::step_into(std::span<double> out, std::span<double> scratch, std::span<const double> g,
                            const ActiveSet& act_prev, const ActiveSet& act, std::span<const double> h_prev,
                            std::span<const double> x, std::span<const double> w) const {
  const std::size_t d = h_prev.size();
  const std::size_t kp = act_prev.indices.size();
  const std::uint32_t* cols = act_prev.indices.data();
  for (std::size_t j = 0; j < kp; ++j) scratch[j] = h_prev[cols[j]];

  if (w.empty()) {
    std::copy(h_prev.begin(), h_prev.end(), out.begin());
  } else {
    for (std::size_t i = 0; i < d; ++i) out[i] = h_prev[i] + w[i];
  }

  std::size_t cursor = 0;  // walks act_prev alongside act (both sorted)
  for (const std::uint32_t i : act.indices) {
    const double* arow = p_.a.row(i).data();
    double ah = 0.0;
    for (std::size_t j = 0; j < kp; ++j) ah += arow[cols[j]] * scratch[j];
    while (cursor < kp && cols[cursor] < i) ++cursor;
    if (cursor == kp || cols[cursor] != i) ah += arow[i] * h_prev[i];  // keep the diagonal term
    const double u = ah + input_row(p_, i, x);
    double v = g[i] * u;
    v = v + (1.0 - g[i]) * h_prev[i];
    if (!w.empty()) v = v + w[i];
    out[i] = v;
  }
}

BlockStep BlockKernel::step(std::span<const double> g, const ActiveSet& act_prev, const ActiveSet& act,
                            std::span<const double> h_prev, std::span<const double> x,
                            std::span<const double> w) const {
  check_step_shapes(p_, g, h_prev, x, w, act);
  if (!act_prev.indices.empty() && act_prev.indices.back() >= h_prev.size())
    throw Error(Errc::IndexOutOfRange, "previous active index beyond state dimension");
  const std::size_t d = h_prev.size();
  BlockStep res;
  res.h.resize(d);
  Vec scratch(d);
  step_into(res.h, scratch, g, act_prev, act, h_prev, x, w);

  std::vector<char> in_prev(d, 0);
  for (const std::uint32_t j : act_prev.indices) in_prev[j] = 1;
  double h_full = 0.0, h_act = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double sq = h_prev[j] * h_prev[j];
    h_full += sq;
    if (in_prev[j]) h_act += sq;
  }
  const double slack = static_cast<double>(d) * kEps;
  const double h_out = std::max(0.0, h_full - h_act) + slack * h_full;

  res.row_bounds.reserve(act.indices.size());
  for (const std::uint32_t i : act.indices) {
    const auto arow = p_.a.row(i);
    double a_act = 0.0;
    for (const std::uint32_t j : act_prev.indices) a_act += arow[j] * arow[j];
    if (!in_prev[i]) a_act += arow[i] * arow[i];
    const double a_out = std::max(0.0, row_norm_sq_[i] - a_act) + slack * row_norm_sq_[i];
    // Cauchy–Schwarz on the dropped columns, plus summation round-off of both kernels
    const double bound = g[i] * (std::sqrt(a_out) * std::sqrt(h_out) +
                                 4.0 * slack * std::sqrt(row_norm_sq_[i] * h_full));
    res.row_bounds.push_back(bound);
    res.error_bound = std::max(res.error_bound, bound);
  }
  return res;
}

BlockStep sparse_step_block(const SsmParams& p, std::span<const double> g, const ActiveSet& act_prev,
                            const ActiveSet& act, std::span<const double> h_prev, std::span<const double> x,
                            std::span<const double> w) {
  return BlockKernel(p).step(g, act_prev, act, h_prev, x, w);
}

DeltaTrajectory::DeltaTrajectory(Vec h0, double threshold) : h0_(std::move(h0)), threshold_(threshold) {}

void DeltaTrajectory::append(const ActiveSet& act, std::span<const double> new_values) {
  if (new_values.size() != act.indices.size())
    throw Error(Errc::DimensionMismatch, "delta values must align with the active indices");
  for (std::size_t k = 0; k < act.indices.size(); ++k) {
    if (act.indices[k] >= h0_.size())
      throw Error(Errc::IndexOutOfRange, "index " + std::to_string(act.indices[k]) + " outside state");
    if (k > 0 && act.indices[k] <= act.indices[k - 1])
      throw Error(Errc::IndexOutOfRange, "delta indices must be sorted and unique");
  }
  indices_.insert(indices_.end(), act.indices.begin(), act.indices.end());
  values_.insert(values_.end(), new_values.begin(), new_values.end());
  offsets_.push_back(indices_.size());
}

void DeltaTrajectory::append_state(const ActiveSet& act, std::span<const double> state) {
  if (state.size() != h0_.size()) throw Error(Errc::DimensionMismatch, "state length must equal d");
  Vec vals;
  vals.reserve(act.indices.size());
  for (const std::uint32_t i : act.indices) {
    if (i >= state.size()) throw Error(Errc::IndexOutOfRange, "active index outside state");
    vals.push_back(state[i]);
  }
  append(act, vals);
}

Vec DeltaTrajectory::reconstruct(std::size_t t) const {
  if (t > steps()) throw Error(Errc::IndexOutOfRange, "reconstruct beyond stored steps");
  Vec h = h0_;
  for (std::size_t k = 0; k < offsets_[t]; ++k) h[indices_[k]] = values_[k];
  return h;
}

std::span<const std::uint32_t> DeltaTrajectory::step_indices(std::size_t t) const {
  return {indices_.data() + offsets_[t], offsets_[t + 1] - offsets_[t]};
}

std::span<const double> DeltaTrajectory::step_values(std::size_t t) const {
  return {values_.data() + offsets_[t], offsets_[t + 1] - offsets_[t]};
}

MemoryFootprint DeltaTrajectory::memory_footprint() const noexcept {
  MemoryFootprint m;
  m.pairs = indices_.size();
  m.values = m.pairs + h0_.size();
  m.bytes = m.pairs * (kIndexWidth + sizeof(double)) + h0_.size() * sizeof(double);
  return m;
}

SparseRollout sparse_rollout(const SsmParams& p, const GateParams& gp, const Mat& inputs, std::span<const double> h0,
                             double tau) {
  const std::size_t d = p.state_dim();
  SparseRollout out{DeltaTrajectory(Vec(h0.begin(), h0.end()), tau), Mat(inputs.rows(), d),
                    Mat(inputs.rows(), d), 0};
  Vec h(h0.begin(), h0.end());
  Vec next(d);
  for (std::size_t t = 0; t < inputs.rows(); ++t) {
    const auto x = inputs.row(t);
    const Vec g = gate_eval(gp, x, h);
    const ActiveSet act = active_set(g, tau);
    sparse_step_rows_into(next, p, g, act, h, x, {});
    h.swap(next);
    out.deltas.append_state(act, h);
    out.active_total += act.size();
    std::copy(h.begin(), h.end(), out.states.row(t).begin());
    std::copy(g.begin(), g.end(), out.gates.row(t).begin());
  }
  return out;
}

namespace {

template <typename F>
std::vector<double> time_kernel(F&& kernel, std::size_t reps, double min_rep_ns) {
  using clock = std::chrono::steady_clock;
  auto elapsed_ns = [](clock::time_point a, clock::time_point b) {
    return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
  };
  // warm up and calibrate the inner loop count
  std::size_t inner = 1;
  for (;;) {
    const auto t0 = clock::now();
    for (std::size_t i = 0; i < inner; ++i) kernel();
    const double ns = elapsed_ns(t0, clock::now());
    if (ns >= min_rep_ns || inner >= (std::size_t{1} << 24)) break;
    inner *= 2;
  }
  std::vector<double> samples(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = clock::now();
    for (std::size_t i = 0; i < inner; ++i) kernel();
    samples[r] = elapsed_ns(t0, clock::now()) / static_cast<double>(inner);
  }
  std::sort(samples.begin(), samples.end());
  return samples;
}

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ActiveSet random_subset(std::size_t d, std::size_t k, CounterRng& rng) {
  std::vector<std::uint32_t> all(d);
  std::iota(all.begin(), all.end(), 0u);
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng.below(d - i)]);
  ActiveSet act;
  act.indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(act.indices.begin(), act.indices.end());
  return act;
}

volatile double g_sink = 0.0;

}  // namespace

std::vector<BenchRow> bench_scaling(const BenchOptions& opt) {
  if (opt.reps < 30) throw Error(Errc::InvalidConfig, "bench_scaling needs reps >= 30");
  std::vector<BenchRow> rows;
  for (const std::size_t d : opt.dims) {
    CounterRng rng(opt.seed, Stream::Sampling, d);
    const std::size_t m = opt.input_dim;
    SsmParams p{Mat(d, d), Mat(d, m), Mat(1, d), Mat(d, d), Mat(1, 1)};
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : p.a.data()) v = s * rng.normal();
    for (double& v : p.b.data()) v = rng.normal();
    Vec x(m), h(d), out(d), scratch(d);
    for (double& v : x) v = rng.normal();
    for (double& v : h) v = rng.normal();

    auto record = [&](const std::string& name, std::size_t k, const std::vector<double>& t) {
      rows.push_back({name, d, k, opt.reps, percentile(t, 0.5), percentile(t, 0.1), percentile(t, 0.9)});
    };

    {
      const Vec g(d, 0.5);
      record("dense", d, time_kernel([&] {
               const Vec r = gated_update(p, g, UpdateForm::Retentive, h, x, {});
               g_sink = g_sink + r[0];
             }, opt.reps, opt.min_rep_ns));
    }

    const BlockKernel block(p);
    std::vector<std::size_t> ks;
    for (const double frac : opt.sparsity)
      ks.push_back(std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(frac * static_cast<double>(d))), 1, d));
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (const std::size_t k : ks) {
      const ActiveSet act = random_subset(d, k, rng);
      const ActiveSet act_prev = random_subset(d, k, rng);
      Vec g(d, 0.0);
      for (const std::uint32_t i : act.indices) g[i] = 0.5;
      record("rows", k, time_kernel([&] {
               sparse_step_rows_into(out, p, g, act, h, x, {});
               g_sink = g_sink + out[0];
             }, opt.reps, opt.min_rep_ns));
      record("block", k, time_kernel([&] {
               block.step_into(out, scratch, g, act_prev, act, h, x, {});
               g_sink = g_sink + out[0];
             }, opt.reps, opt.min_rep_ns));
    }
  }
  return rows;
}

double loglog_slope(const std::vector<BenchRow>& rows, const std::string& kernel, std::size_t d) {
  std::vector<double> lx, ly;
  for (const BenchRow& r : rows) {
    if (r.kernel != kernel || r.d != d || r.median_ns <= 0.0) continue;
    lx.push_back(std::log(static_cast<double>(r.k)));
    ly.push_back(std::log(r.median_ns));
  }
  if (lx.size() < 2) throw Error(Errc::InvalidConfig, "need at least two k values to fit a slope");
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "kernel,d,k,reps,median_ns,p10_ns,p90_ns\n";
  os.precision(6);
  for (const BenchRow& r : rows)
    os << r.kernel << ',' << r.d << ',' << r.k << ',' << r.reps << ',' << std::fixed << r.median_ns << ','
       << r.p10_ns << ',' << r.p90_ns << std::defaultfloat << '\n';
  return os.str();
}

}  // namespace ssmlab
