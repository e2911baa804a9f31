#include "ssmlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ssmlab/error.hpp"

namespace ssmlab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::DimensionMismatch, what);
}

std::string shape(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "Mat data length must equal rows*cols");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged initializer for Mat");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(std::span<const double> d) {
  Mat m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    require(row.size() == c, "ragged nested array for Mat");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Mat(r, c, std::move(data));
}

std::vector<std::vector<double>> Mat::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

Vec matvec(const Mat& m, std::span<const double> v) {
  require(m.cols() == v.size(), "matvec: matrix columns must equal vector length");
  Vec out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * v[j];
    out[i] = acc;
  }
  return out;
}

Vec matvec_transposed(const Mat& m, std::span<const double> v) {
  require(m.rows() == v.size(), "matvec_transposed: matrix rows must equal vector length");
  Vec out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    const double vi = v[i];
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] * vi;
  }
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols() == b.rows(), ("matmul: " + shape(a) + " * " + shape(b)).c_str());
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      auto orow = out.row(i);
      for (std::size_t j = 0; j < brow.size(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Mat transpose(const Mat& m) {
  Mat out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Mat add(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Mat out = a;
  auto o = out.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

Mat sub(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  Mat out = a;
  auto o = out.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

Mat scale(const Mat& m, double s) {
  Mat out = m;
  for (double& x : out.data()) x *= s;
  return out;
}

Mat symmetrize(const Mat& m) {
  require(m.square(), "symmetrize: matrix must be square");
  Mat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) + m(j, i));
  return out;
}

Mat outer(std::span<const double> a, std::span<const double> b) {
  Mat out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = a[i] * b[j];
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double frobenius_norm(const Mat& m) { return norm2(m.data()); }

double max_abs_diff(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double best = 0.0;
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) best = std::max(best, std::abs(ad[i] - bd[i]));
  return best;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool is_symmetric(const Mat& m, double tol) {
  if (!m.square()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

Vec lu_solve(Mat a, Vec b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw Error(Errc::DimensionMismatch, "lu_solve needs a square system");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw Error(Errc::NoConvergence, "lu_solve: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * b[j];
    b[k] = s / a(k, k);
  }
  return b;
}

Mat cholesky(const Mat& m) {
  require(m.square(), "cholesky: matrix must be square");
  if (!is_symmetric(m)) throw Error(Errc::NotSymmetric, "cholesky: matrix is not symmetric");
  const std::size_t n = m.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 1e-300)) {
      throw Error(Errc::NotPositiveDefinite,
                  "cholesky: pivot " + std::to_string(pivot) + " at index " + std::to_string(j));
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Mat psd_factor(const Mat& m) {
  require(m.square(), "psd_factor: matrix must be square");
  const std::size_t n = m.rows();
  double scale_ref = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale_ref = std::max(scale_ref, std::abs(m(i, i)));
  const double floor = 1e-14 * std::max(scale_ref, 1e-300);
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot <= floor) continue;  // degenerate direction: column stays zero
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

double cholesky_logdet(const Mat& m) {
  const Mat l = cholesky(m);
  double acc = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

SpectralNorm spectral_norm(const Mat& m, double tol, std::size_t max_iter) {
  require(!m.empty(), "spectral_norm: empty matrix");
  const std::size_t n = m.cols();
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i + 1) / static_cast<double>(n);
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  SpectralNorm out;
  double prev = -1.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Vec mv = matvec(m, v);
    const double sigma = norm2(mv);  // Rayleigh quotient sqrt(vᵀmᵀmv) for unit v
    out.value = std::max(out.value, sigma);
    out.iterations = it;
    if (sigma == 0.0) {
      // v is in the null space; all of mᵀm may be zero
      if (frobenius_norm(m) == 0.0) {
        out.converged = true;
        return out;
      }
    }
    Vec w = matvec_transposed(m, mv);
    const double nw = norm2(w);
    if (nw == 0.0) {
      // restart from a basis vector not yet explored
      std::fill(w.begin(), w.end(), 0.0);
      w[it % n] = 1.0;
    } else {
      for (double& x : w) x /= nw;
    }
    v = std::move(w);
    if (prev >= 0.0 && std::abs(sigma - prev) <= tol * std::max(sigma, 1e-300)) {
      out.converged = true;
      return out;
    }
    prev = sigma;
  }
  return out;
}

double spectral_norm_value(const Mat& m) { return spectral_norm(m).value; }

SymEigen sym_eigen(const Mat& m) {
  require(m.square(), "sym_eigen: matrix must be square");
  if (!is_symmetric(m)) throw Error(Errc::NotSymmetric, "sym_eigen: matrix is not symmetric");
  const std::size_t n = m.rows();
  Mat a = symmetrize(m);
  Mat v = Mat::identity(n);  // columns accumulate eigenvectors during sweeps
  const double ref = frobenius_norm(m);
  const double stop = 1e-12 * ref;

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > stop; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  SymEigen out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(k, i) = v(i, order[k]);
  }
  return out;
}

Mat lyapunov_step(const Mat& sigma, const Mat& a, const Mat& q) {
  require(a.square() && sigma.square() && q.square(), "lyapunov_step: matrices must be square");
  require(a.rows() == sigma.rows() && q.rows() == a.rows(), "lyapunov_step: dimension mismatch");
  return symmetrize(add(matmul(matmul(a, sigma), transpose(a)), q));
}

}  // namespace ssmlab
