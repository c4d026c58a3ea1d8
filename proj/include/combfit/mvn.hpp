#pragma once

// Multivariate Gaussian kernels: correlation matrices, Cholesky-backed
// densities, and orthant probabilities. Dimensions 1-4 are deterministic
// (closed form / fixed quadrature); d >= 5 uses the Genz
// separation-of-variables transform integrated with scrambled Sobol
// points (Kronecker rule beyond 32 dimensions).

#include <cstdint>
#include <span>
#include <vector>

#include "combfit/linalg.hpp"

namespace combfit {

// Symmetric positive-definite with unit diagonal and off-diagonals strictly
// inside (-1,1). Validated on construction.
class CorrelationMatrix {
 public:
  CorrelationMatrix() : CorrelationMatrix(Matrix::identity(1)) {}
  explicit CorrelationMatrix(Matrix entries);
  CorrelationMatrix(int dim, const std::vector<double>& entries);

  static CorrelationMatrix identity(int dim);
  // Entries listed row-wise above the diagonal: (0,1),(0,2),...,(d-2,d-1).
  static CorrelationMatrix from_upper(int dim, std::span<const double> upper);

  int dim() const { return m_.rows(); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  const Matrix& chol() const { return chol_; }

  std::vector<double> upper_entries() const;
  CorrelationMatrix submatrix(std::span<const int> indices) const;

 private:
  Matrix m_;
  Matrix chol_;
};

// Conformable block decomposition of a correlation matrix along an active
// index set S and its complement T, with the conditional-law ingredients
// shift = R_TS R_SS^{-1} and schur = R_TT - R_TS R_SS^{-1} R_ST.
struct PartitionedCorrelation {
  std::vector<int> active;    // S, sorted
  std::vector<int> inactive;  // T, sorted
  Matrix r_ss, r_st, r_ts, r_tt;
  Matrix shift;  // |T| x |S|
  Matrix schur;  // |T| x |T|
};

PartitionedCorrelation partition(const CorrelationMatrix& r, std::span<const int> active);

inline constexpr double kDefaultMvnTol = 1e-7;

struct MvnEstimate {
  double value;
  double error;  // estimated absolute error (0 for the closed-form paths)
};

// P(X < h, Y < k) for standard bivariate normal with correlation rho.
// Genz (2004) rewrite of Drezner & Wesolowsky; deterministic, ~1e-15.
double bvn_cdf(double h, double k, double rho);

// P(Z <= z) for Z ~ N(0, R). Deterministic for fixed (z, R, tol, seed); the
// seed only matters for d >= 3.
double mvn_cdf(std::span<const double> z, const CorrelationMatrix& r,
               double tol = kDefaultMvnTol, std::uint64_t seed = 0);
MvnEstimate mvn_cdf_estimate(std::span<const double> z, const CorrelationMatrix& r,
                             double tol = kDefaultMvnTol, std::uint64_t seed = 0);

// Same probability for a general positive-definite covariance (standardizes
// internally). Used for the conditional cdf factors whose Schur complements
// do not have unit diagonals.
double mvn_cdf_cov(std::span<const double> z, const Matrix& cov,
                   double tol = kDefaultMvnTol, std::uint64_t seed = 0);

double mvn_pdf(std::span<const double> z, const CorrelationMatrix& r);
double mvn_log_pdf(std::span<const double> z, const CorrelationMatrix& r);
double mvn_log_pdf_cov(std::span<const double> z, const Matrix& cov);

}  // namespace combfit
