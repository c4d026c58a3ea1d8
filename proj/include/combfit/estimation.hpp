#pragma once

// Two-stage (inference-functions-for-margins) estimation of the model:
// closed-form marginal MLEs first, then simplex maximization of the exact
// log-likelihood over an angle chart of the correlation matrices. Also the
// continuous-marginal limit likelihood, the Spearman/Gaussian relation with
// tie bounds, and the subset-wise zero-mixed benchmark calibrator.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "combfit/model.hpp"

namespace combfit {

// Unconstrained chart on the correlation matrices: the Cholesky factor's
// rows in spherical coordinates, every angle in (0, pi). The image is
// always a valid correlation matrix.
struct CorrelationParam {
  std::vector<double> angles;  // d(d-1)/2, rows of the factor in order
};

CorrelationMatrix correlation_from_angles(const CorrelationParam& param, int dim);
CorrelationParam angles_from_correlation(const CorrelationMatrix& r);

struct FitOptions {
  double tol = 1e-4;          // simplex diameter in angle space
  int max_iter = 400;
  int restarts = 3;           // first restart is the Spearman warm start
  std::uint64_t seed = 0x5eedf17ull;
  double mvn_tol = kDefaultMvnTol;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct FitReport {
  std::vector<MarginalFit> marginals;
  CorrelationMatrix correlation;
  double loglik = 0.0;
  long iterations = 0;
  bool converged = false;
  long clamp_count = 0;
  // Filled by the bootstrap driver when confidence intervals are requested.
  std::vector<Interval> correlation_ci;

  CombBernoulliModel to_model(double mvn_tol = kDefaultMvnTol,
                              std::uint64_t base_seed = 0) const;
};

FitReport fit_ifm(const ClaimSeries& series, const FitOptions& opts = {});

// Limit log-likelihood for vanishing atoms: copula density at the severity
// cdfs plus the severity log-densities. Zero entries are clamped and
// counted through `n_zero_flagged`.
double limit_loglik(std::span<const MixedMarginal> marginals, const CorrelationMatrix& r,
                    const ClaimSeries& series, long* n_zero_flagged = nullptr);

// Gaussian-copula correlation equivalent of a Spearman correlation and its
// inverse: R = 2 sin(pi rho / 6), rho = (6/pi) asin(R / 2).
double spearman_transform(double rho);
double spearman_transform_inverse(double r);

std::vector<double> midranks(std::span<const double> v);
double sample_spearman(std::span<const double> x, std::span<const double> y);

struct SpearmanBounds {
  double lo = -1.0;
  double hi = 1.0;
  bool degenerate = false;  // a constant input leaves the full range
};

// Minimum and maximum sample Spearman correlation over all admissible rank
// assignments within tied blocks of x and y.
SpearmanBounds spearman_bounds(std::span<const double> x, std::span<const double> y);

struct ZeroMixedOptions {
  std::uint64_t seed = 0;
  double mvn_tol = kDefaultMvnTol;
  double alpha = 0.05;
};

struct ZeroMixedSubset {
  std::vector<int> indices;
  long count = 0;
  double p_hat = 0.0;
  Interval p_ci;
  // Correlation entries of the subset copula in upper-triangle order;
  // empty when |S| < 2 or the estimate is undetermined.
  std::vector<double> correlation;
  std::vector<Interval> correlation_ci;
  bool undetermined = false;
  bool wide = false;
};

struct ZeroMixedReport {
  long n_rows = 0;
  int dim = 0;
  long parameter_count = 0;  // occurrence + dependence parameters (Bonferroni m)
  std::vector<MarginalFit> severities;
  std::vector<ZeroMixedSubset> subsets;
};

// Benchmark calibrator: one occurrence probability per active-set pattern
// and one Gaussian copula per co-jump pattern, fitted on the rows whose
// active set is exactly that pattern. Exponential in d by construction;
// guarded to d <= 4.
ZeroMixedReport zero_mixed_fit(const ClaimSeries& series, const ZeroMixedOptions& opts = {});

}  // namespace combfit
