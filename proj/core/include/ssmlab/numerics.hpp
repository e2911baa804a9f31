#pragma once

// Dense linear algebra kernels sized for state dimensions up to a few hundred.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ssmlab {

using Vec = std::vector<double>;

// Row-major dense matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat diag(std::span<const double> d);
  static Mat from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Basic algebra. Shape violations throw Error(DimensionMismatch).
Vec matvec(const Mat& m, std::span<const double> v);
Vec matvec_transposed(const Mat& m, std::span<const double> v);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(const Mat& m, double s);
Mat symmetrize(const Mat& m);
Mat outer(std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double frobenius_norm(const Mat& m);
double max_abs_diff(const Mat& a, const Mat& b);
bool all_finite(std::span<const double> v);
bool is_symmetric(const Mat& m, double tol = 1e-10);

// Lower Cholesky factor of an SPD matrix; throws NotPositiveDefinite on a pivot <= 1e-300.
Mat cholesky(const Mat& m);

// Factor L with L·Lᵀ = m for symmetric PSD m; zero pivots yield zero columns.
Mat psd_factor(const Mat& m);

// ln det(m) for symmetric positive definite m.
double cholesky_logdet(const Mat& m);

// Solves a·x = b by LU with partial pivoting; throws NoConvergence on a zero pivot.
Vec lu_solve(Mat a, Vec b);

struct SpectralNorm {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Largest singular value by power iteration on mᵀm. Non-convergence is reported
// through the flag with the best estimate so far.
SpectralNorm spectral_norm(const Mat& m, double tol = 1e-13, std::size_t max_iter = 20000);

// Convenience wrapper returning the estimate only.
double spectral_norm_value(const Mat& m);

struct SymEigen {
  Vec values;   // descending
  Mat vectors;  // row k is the eigenvector for values[k]; m = Vᵀ·diag(values)·V
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymEigen sym_eigen(const Mat& m);

// A·Σ·Aᵀ + Q, symmetrized.
Mat lyapunov_step(const Mat& sigma, const Mat& a, const Mat& q);

}  // namespace ssmlab
