#pragma once

// Model core: claim series, active sets, the exact mixed
// discrete-continuous log-likelihood, active-set probabilities, the
// bivariate/trivariate closed forms, and threshold-transform simulation.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "combfit/copula.hpp"
#include "combfit/marginals.hpp"

namespace combfit {

struct ClaimSeries {
  long n_rows = 0;
  int n_cols = 0;
  std::vector<double> values;  // row-major, n_rows x n_cols, non-negative
  std::vector<std::string> labels;

  double at(long r, int c) const { return values[static_cast<size_t>(r) * n_cols + c]; }
  double& at(long r, int c) { return values[static_cast<size_t>(r) * n_cols + c]; }
  std::span<const double> row(long r) const {
    return {values.data() + static_cast<size_t>(r) * n_cols, static_cast<size_t>(n_cols)};
  }
  std::vector<double> column(int c) const;
  void validate() const;
};

struct ActiveSet {
  std::vector<int> indices;  // strictly increasing
  int cardinality() const { return static_cast<int>(indices.size()); }
};

ActiveSet active_set(std::span<const double> x);

struct CombBernoulliModel {
  std::vector<MixedMarginal> marginals;
  GaussianCopula copula;

  int dim() const { return static_cast<int>(marginals.size()); }
  void validate() const;
};

struct LikelihoodDiagnostics {
  long clamp_count = 0;
  long underflow_count = 0;  // conditional-cdf factors floored before the log
  // Per active set: observation count and summed log-likelihood contribution.
  std::map<std::vector<int>, std::pair<long, double>> per_active_set;
};

// Seed stream shared by every all-zero observation, so that sharding rows
// across workers cannot change the quasi-Monte-Carlo randomization.
inline constexpr std::uint64_t kEmptySetSeedStream = 0xE117C0;

// Log-likelihood of `series` with the marginal parameters frozen; the
// per-row pseudo-observations are precomputed once so repeated evaluation
// across candidate correlation matrices (the second IFM stage) stays cheap.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(std::span<const MixedMarginal> marginals, const ClaimSeries& series,
                      double mvn_tol = kDefaultMvnTol, std::uint64_t base_seed = 0);

  double eval(const CorrelationMatrix& r, LikelihoodDiagnostics* diag = nullptr) const;

  long clamp_count() const { return clamp_count_; }
  int dim() const { return dim_; }
  long n_rows() const { return n_rows_; }

 private:
  struct Group {
    std::vector<int> active;
    std::vector<long> rows;
    std::vector<double> z_active;   // |rows| x |active|, row-major
    std::vector<double> z_thresh;   // Phi^{-1}(1-p_j) for j outside the set
    double marginal_term = 0.0;     // sum of ln(p_i psi_i(x_i)) over the group
  };
  int dim_;
  long n_rows_;
  double mvn_tol_;
  std::uint64_t base_seed_;
  long clamp_count_ = 0;
  std::vector<Group> groups_;
};

double log_likelihood(const CombBernoulliModel& model, const ClaimSeries& series,
                      LikelihoodDiagnostics* diag = nullptr);

// Appendix-style explicit per-observation log-likelihoods, kept independent
// of the partition machinery; used as oracles for the general path.
double loglik_closed_form_2d(const CombBernoulliModel& model, double x1, double x2);
double loglik_closed_form_3d(const CombBernoulliModel& model, const std::array<double, 3>& x);

// P(exactly the components in I jump) by inclusion-exclusion over restricted
// survival copulas. Enumerates supersets of I; guarded to dim <= 20.
double active_set_probability(const CombBernoulliModel& model, std::span<const int> i_set);

// Threshold-transform simulation: draw u from the copula, map each
// coordinate through the generalized marginal inverse. The boundary
// u_i <= 1 - p_i belongs to the atom.
ClaimSeries simulate(const CombBernoulliModel& model, long n, std::uint64_t seed);

}  // namespace combfit
