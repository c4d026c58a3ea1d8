#pragma once

// Continuous-time side of the model: Poisson scaling of the active-set
// probabilities, the 2^d-1-process jump simulator used for the scaling
// benchmark, and the bivariate Clayton continuous-time log-likelihood.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "combfit/marginals.hpp"
#include "combfit/model.hpp"

namespace combfit {

struct IntensitySet {
  double horizon = 0.0;  // T
  // Bitmask over components -> exact-active-set intensity. Mask 0 is absent.
  std::unordered_map<std::uint32_t, double> lambda_perp;

  double total() const;                  // sum over non-empty subsets
  double component_lambda(int i) const;  // sum over subsets containing i
};

// lambda_I = P(active set exactly I) / dt for every non-empty I. Computed
// for all subsets at once: survival copula on every subset, then one
// inclusion-exclusion sweep.
IntensitySet intensities_from_model(const CombBernoulliModel& model, double dt,
                                    double horizon);

struct LevyEvent {
  double time = 0.0;
  std::uint32_t mask = 0;
  std::vector<double> losses;  // full d-vector, zeros off the active set
};

// For each non-empty subset, a Poisson number of events with uniform times;
// jump sizes come from the model law conditioned on the active set, obtained
// by rejection on threshold-transform draws. Events are merged in
// (time, mask) order.
std::vector<LevyEvent> simulate_levy(const IntensitySet& intensities,
                                     const CombBernoulliModel& model, std::uint64_t seed);

// Clayton Levy copula F(u,v) = (u^-delta + v^-delta)^(-1/delta) with the
// closed-form partial derivatives the bivariate likelihood needs.
struct ClaytonLevyCopula {
  double delta = 1.0;

  double value(double u, double v) const;
  double du(double u, double v) const;    // d/du
  double dv(double u, double v) const;    // d/dv
  double dudv(double u, double v) const;  // mixed second partial
};

// Exact-active-set intensities induced by the Levy copula in d=2:
// lambda_{12} = F(l1,l2), lambda_{1} = l1 - F, lambda_{2} = l2 - F.
struct BivariateIntensities {
  double only_first = 0.0;
  double only_second = 0.0;
  double joint = 0.0;
};
BivariateIntensities clayton_intensities(double lambda1, double lambda2,
                                         const ClaytonLevyCopula& copula);

// Continuous-time log-likelihood of a bivariate event record over (0, T].
double continuous_time_loglik_2d(std::span<const LevyEvent> events, double lambda1,
                                 double lambda2, const SeverityDistribution& severity1,
                                 const SeverityDistribution& severity2,
                                 const ClaytonLevyCopula& copula, double horizon);

}  // namespace combfit
