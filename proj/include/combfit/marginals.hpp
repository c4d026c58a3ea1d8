#pragma once

// Mixed discrete-continuous claim marginals: an atom at zero with mass 1-p
// and a continuous severity law on (0, inf). Lognormal is the severity that
// ships; the interface leaves room for Pareto/Gamma alternatives.

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace combfit {

class SeverityDistribution {
 public:
  virtual ~SeverityDistribution() = default;
  virtual double pdf(double x) const = 0;
  virtual double log_pdf(double x) const = 0;
  virtual double cdf(double x) const = 0;
  virtual double survival(double x) const = 0;
  virtual double quantile(double q) const = 0;
  virtual std::vector<double> params() const = 0;
  virtual std::string name() const = 0;
};

class LognormalSeverity final : public SeverityDistribution {
 public:
  LognormalSeverity(double mu, double sigma);
  double pdf(double x) const override;
  double log_pdf(double x) const override;
  double cdf(double x) const override;
  double survival(double x) const override;
  double quantile(double q) const override;
  std::vector<double> params() const override { return {mu_, sigma_}; }
  std::string name() const override { return "lognormal"; }

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }

 private:
  double mu_, sigma_;
};

struct MixedMarginal {
  double p = 1.0;  // probability of a positive claim, in (0,1]
  std::shared_ptr<const SeverityDistribution> severity;

  // (1-p) at x=0, (1-p) + p Psi(x) for x>0.
  double cdf(double x) const;
  double survival(double x) const { return 1.0 - cdf(x); }
  // Generalized inverse of cdf: the atom absorbs u <= 1-p.
  double quantile(double u) const;
};

MixedMarginal make_lognormal_marginal(double p, double mu, double sigma);

struct MarginalFit {
  MixedMarginal marginal;
  int n_positive = 0;
  long n_total = 0;
  double p_stderr = 0.0;
  double mu_stderr = 0.0;
  double sigma_stderr = 0.0;
};

// Closed-form MLE: p-hat is the positive fraction; (mu, sigma) are the
// moments of the positive log-claims with the MLE divisor n.
MarginalFit fit_marginal(std::span<const double> column);

}  // namespace combfit
