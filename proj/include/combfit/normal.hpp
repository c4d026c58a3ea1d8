#pragma once

// Scalar standard-normal kernels. The quantile follows Wichura's AS 241
// (PPND16); cdf/survival go through erfc so the tails keep full relative
// precision.

namespace combfit {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
inline constexpr double kSqrt2 = 1.4142135623730950488016887;

double std_normal_pdf(double x);
double std_normal_log_pdf(double x);
double std_normal_cdf(double x);
double std_normal_survival(double x);

// Inverse cdf on (0,1). Throws DomainError at 0 and 1: atoms must be handled
// by the caller.
double std_normal_quantile(double p);

}  // namespace combfit
