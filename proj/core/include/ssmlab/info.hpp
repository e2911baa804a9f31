#pragma once

// Information measures for Gaussian state distributions. All quantities are in nats
// unless the name says otherwise.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssmlab/numerics.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab {

struct GaussianBelief {
  Vec mean;
  Mat cov;
};

enum class MiKind { ClosedForm, MomentMatchedUpperBound };

struct MiEstimate {
  double value = 0.0;
  double std_err = 0.0;
  MiKind kind = MiKind::ClosedForm;
  bool clamped = false;  // raw estimate was negative and has been clamped to 0
};

// (d/2)·ln(2πe) + ½·ln det(cov).
double gaussian_entropy(const Mat& cov);

// I(h_t; x_{1:t}) for the ungated recurrence driven by iid N(0, input_cov) inputs.
MiEstimate state_mi_linear(const SsmParams& p, const Mat& input_cov, const Mat& h0_cov, std::size_t t);

// Same quantity for InputOnly gated dynamics. The conditional entropy is averaged over
// n_mc sampled input sequences; the marginal entropy uses the moment-matched Gaussian,
// so the result is an upper bound. std_err is a grouped-jackknife estimate of the
// whole difference. h_0 is fixed at zero.
MiEstimate state_mi_gated(const SsmParams& p, const GateParams& gp, UpdateForm form, const Mat& input_cov,
                          std::size_t t, std::size_t n_mc, std::uint64_t seed);

struct RdPoint {
  double distortion = 0.0;
  double rate = 0.0;  // nats
};

struct RdCurve {
  std::vector<RdPoint> points;  // ascending distortion, non-increasing rate
  double total_variance = 0.0;
};

// Reverse water-filling over the eigenvalues of cov, distortion = total squared error.
RdCurve rd_gaussian(const Mat& cov, std::span<const double> distortions);

// rd_gaussian on `points` distortions spread over (0, total variance], ending at the
// zero-rate point. Spacing is geometric so rates near zero distortion stay resolved.
RdCurve rd_gaussian_grid(const Mat& cov, std::size_t points, double min_fraction = 1e-3);

struct BlahutArimotoResult {
  double rate = 0.0;  // nats
  double distortion = 0.0;
  std::size_t iterations = 0;
};

// Rate-distortion point for a discrete source at Lagrange multiplier beta.
// distortion(i, j) is the cost of reproducing source symbol i by reproduction symbol j.
// Stops once the upper and lower bounds on R(distortion) are within tol.
BlahutArimotoResult blahut_arimoto(std::span<const double> source_pmf, const Mat& distortion, double beta,
                                   double tol = 1e-12, std::size_t max_iter = 100000);

// Fano lower bound on the error probability, h_cond given in nats; the "−1" is one bit.
double fano_bound(double h_cond_nats, std::size_t alphabet_size);
double fano_bound_bits(double h_cond_bits, std::size_t alphabet_size);

enum class Theorem1Reason { Holds, InsufficientInformation, DistortionExceeded };

struct Theorem1Verdict {
  bool holds = false;
  Theorem1Reason reason = Theorem1Reason::Holds;
  double d_max = 0.0;               // distortion at which the curve reaches i_min
  double interpolation_slack = 0.0; // width of the bracketing segment
};

std::string to_string(Theorem1Reason r);

// Throws RateNotOnCurve when i_min exceeds the curve's largest rate.
double rd_inverse(const RdCurve& rd, double rate, double* slack = nullptr);

Theorem1Verdict theorem1_check(const MiEstimate& mi, double i_min, const RdCurve& rd, double observed_distortion);

// Entropy in bits of the empirical conditional distribution H(X | Y) from a count matrix
// counts(x, y).
double conditional_entropy_bits(const Mat& counts);

}  // namespace ssmlab
