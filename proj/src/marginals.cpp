#include "combfit/marginals.hpp"

#include <cmath>

#include "combfit/errors.hpp"
#include "combfit/normal.hpp"

namespace combfit {

LognormalSeverity::LognormalSeverity(double mu, double sigma) : mu_(mu), sigma_(sigma) {
  if (!(sigma > 0.0)) throw DomainError("LognormalSeverity: sigma must be positive");
}

double LognormalSeverity::pdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  return std_normal_pdf((std::log(x) - mu_) / sigma_) / (x * sigma_);
}

double LognormalSeverity::log_pdf(double x) const {
  if (!(x > 0.0)) throw DomainError("LognormalSeverity::log_pdf: x must be positive");
  return std_normal_log_pdf((std::log(x) - mu_) / sigma_) - std::log(x * sigma_);
}

double LognormalSeverity::cdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  return std_normal_cdf((std::log(x) - mu_) / sigma_);
}

double LognormalSeverity::survival(double x) const {
  if (!(x > 0.0)) return 1.0;
  return std_normal_survival((std::log(x) - mu_) / sigma_);
}

double LognormalSeverity::quantile(double q) const {
  if (!(q > 0.0 && q < 1.0))
    throw DomainError("LognormalSeverity::quantile: level must lie in (0,1)");
  return std::exp(mu_ + sigma_ * std_normal_quantile(q));
}

double MixedMarginal::cdf(double x) const {
  if (x < 0.0) throw DomainError("MixedMarginal::cdf: claims are non-negative");
  if (x == 0.0) return 1.0 - p;
  return (1.0 - p) + p * severity->cdf(x);
}

double MixedMarginal::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("MixedMarginal::quantile: level outside (0,1)");
  const double atom = 1.0 - p;
  if (u <= atom) return 0.0;
  return severity->quantile((u - atom) / p);
}

MixedMarginal make_lognormal_marginal(double p, double mu, double sigma) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("MixedMarginal: p must lie in (0,1]");
  return MixedMarginal{p, std::make_shared<LognormalSeverity>(mu, sigma)};
}

MarginalFit fit_marginal(std::span<const double> column) {
  if (column.empty()) throw DomainError("fit_marginal: empty column");
  long n_pos = 0;
  double mean = 0.0;
  for (double x : column) {
    if (x < 0.0) throw DomainError("fit_marginal: negative claim value");
    if (x > 0.0) {
      ++n_pos;
      mean += (std::log(x) - mean) / n_pos;
    }
  }
  if (n_pos < 2)
    throw InsufficientPositives("fit_marginal: need at least 2 positive observations");
  double ss = 0.0;
  for (double x : column)
    if (x > 0.0) {
      const double d = std::log(x) - mean;
      ss += d * d;
    }
  const double n = static_cast<double>(column.size());
  const double sigma = std::sqrt(ss / n_pos);  // MLE divisor n, not n-1
  const double p = n_pos / n;

  MarginalFit fit;
  fit.marginal = make_lognormal_marginal(p, mean, sigma);
  fit.n_positive = static_cast<int>(n_pos);
  fit.n_total = static_cast<long>(column.size());
  fit.p_stderr = std::sqrt(p * (1.0 - p) / n);
  fit.mu_stderr = sigma / std::sqrt(static_cast<double>(n_pos));
  fit.sigma_stderr = sigma / std::sqrt(2.0 * n_pos);
  return fit;
}

}  // namespace combfit
