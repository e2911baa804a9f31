#pragma once

#include <cstdint>
#include <utility>

#include "ssmlab/numerics.hpp"
#include "ssmlab/rng.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab::testing {

inline Mat random_mat(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed, Stream::Sampling, 99);
  Mat m(r, c);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

inline Vec random_vec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed, Stream::Sampling, 98);
  Vec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline Mat random_spd(std::size_t n, std::uint64_t seed) {
  const Mat g = random_mat(n, n, seed);
  Mat s = matmul(g, transpose(g));
  for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.5;
  return symmetrize(s);
}

// C = I, Q = q·I, R = I.
inline SsmParams make_params(Mat a, Mat b, double q = 0.0) {
  const std::size_t d = a.rows();
  Mat qm(d, d);
  for (std::size_t i = 0; i < d; ++i) qm(i, i) = q;
  return SsmParams{std::move(a), std::move(b), Mat::identity(d), std::move(qm), Mat::identity(d)};
}

inline GateParams random_gate(std::size_t d, std::size_t m, std::uint64_t seed, Activation act, GateMode mode,
                              double scale = 1.0) {
  GateParams gp{random_mat(d, m, seed, scale), random_mat(d, d, seed + 1, scale), random_vec(d, seed + 2), act, mode};
  if (mode == GateMode::InputOnly) gp.u = Mat(d, d);
  return gp;
}

}  // namespace ssmlab::testing
