#pragma once

// Minimal dense row-major matrix used by the Gaussian kernels. Dimensions in
// this library stay small (d <= 100), so no BLAS is involved.

#include <cstddef>
#include <vector>

namespace combfit {

class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

 private:
  int rows_, cols_;
  std::vector<double> a_;
};

// L such that L L^T = A for symmetric positive-definite A. Throws
// FactorizationError naming the failing pivot when a pivot drops below
// `pivot_tol`.
Matrix cholesky_lower(const Matrix& a, double pivot_tol = 1e-12);

// Solves L y = b for lower-triangular L (forward substitution).
std::vector<double> forward_solve(const Matrix& lower, const std::vector<double>& b);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

}  // namespace combfit
