#pragma once

// Gaussian copula: cdf, density, restricted survival copula, the mixed
// partial derivative that drives the model likelihood, and sampling. A
// Student-t sampler is included for the simulation benchmark only.

#include <cstdint>
#include <span>

#include "combfit/linalg.hpp"
#include "combfit/mvn.hpp"

namespace combfit {

struct GaussianCopula {
  CorrelationMatrix r;
  double mvn_tol = kDefaultMvnTol;
  std::uint64_t base_seed = 0;

  int dim() const { return r.dim(); }
};

// C(u; R) = Phi_d(Phi^{-1}(u); R). Boundary limits: 0 if any u_i = 0;
// coordinates at 1 are dropped (uniform margins).
double copula_cdf(const GaussianCopula& gc, std::span<const double> u,
                  std::uint64_t seed_stream = 0);

// c(u; R) = phi_d(z; R) / phi_d(z; I), z = Phi^{-1}(u). Interior u only.
double copula_density(const GaussianCopula& gc, std::span<const double> u);
double log_copula_density(const GaussianCopula& gc, std::span<const double> u);

// P(U_j > 1 - v_j for all j in J). Radial symmetry of the Gaussian copula
// turns the survival copula into the copula itself on the restricted block:
// Phi_{|J|}(Phi^{-1}(v_J); R_JJ).
double survival_restricted(const GaussianCopula& gc, std::span<const int> j_set,
                           std::span<const double> v, std::uint64_t seed_stream = 0);

// Lemma-style mixed partial of C along the coordinates in S:
// [phi_s(z_S;R_SS)/phi_s(z_S;I)] * Phi_{d-s}(z_T - R_TS R_SS^{-1} z_S;
//                                            R_TT - R_TS R_SS^{-1} R_ST).
double mixed_partial(const GaussianCopula& gc, std::span<const int> s_set,
                     std::span<const double> u, std::uint64_t seed_stream = 0);
double log_mixed_partial(const GaussianCopula& gc, std::span<const int> s_set,
                         std::span<const double> u, std::uint64_t seed_stream = 0);

// n x d copula draws: u = Phi(L e), e iid standard normal.
Matrix sample(const GaussianCopula& gc, long n, std::uint64_t seed);

// n x d Student-t copula draws with nu > 2 (timing benchmark only).
Matrix sample_student_t(const CorrelationMatrix& r, double nu, long n, std::uint64_t seed);

double student_t_cdf(double t, double nu);

}  // namespace combfit
