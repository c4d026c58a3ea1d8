#pragma once

// Parametric bootstrap confidence intervals: simulate replicas from a fitted
// model, refit each one, take empirical quantiles of the re-estimates.

#include <cstdint>
#include <string>
#include <vector>

#include "combfit/estimation.hpp"
#include "combfit/model.hpp"

namespace combfit {

struct BootstrapOptions {
  int replicas = 1000;
  double alpha = 0.05;
  bool bonferroni = true;  // replaces alpha with alpha/m across the m parameters
  std::uint64_t seed = 0x600d5eedull;
  int threads = 1;
  FitOptions fit;
};

struct BootstrapResult {
  std::vector<std::string> parameter_names;  // correlation entries, upper-triangle order
  // B x m re-estimates, replica-major; failed replicas are dropped.
  std::vector<std::vector<double>> replicas;
  double alpha = 0.05;
  bool bonferroni = true;
  std::vector<Interval> intervals;             // the flagged convention
  std::vector<Interval> intervals_plain;       // alpha/2 quantiles
  std::vector<Interval> intervals_bonferroni;  // alpha/(2m) quantiles
  int n_failed = 0;
};

// Empirical quantile convention: nearest-rank ceil, i.e. the ceil(q*B)-th
// order statistic.
double empirical_quantile(std::vector<double> sorted_ascending, double q);

BootstrapResult parametric_bootstrap(const CombBernoulliModel& model, long n_rows,
                                     const BootstrapOptions& opts = {});

}  // namespace combfit
