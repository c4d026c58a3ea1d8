#include "combfit/copula.hpp"

#include <cmath>
#include <vector>

#include "combfit/errors.hpp"
#include "combfit/normal.hpp"
#include "combfit/rng.hpp"

namespace combfit {

namespace {

constexpr double kLogFloor = 1e-300;

void check_dim(const GaussianCopula& gc, size_t n, const char* where) {
  if (static_cast<int>(n) != gc.dim()) throw ShapeError(std::string(where) + ": dimension mismatch");
}

std::vector<double> to_z(std::span<const double> u, const char* where) {
  std::vector<double> z(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0 && u[i] < 1.0))
      throw DomainError(std::string(where) + ": argument must lie strictly in (0,1)");
    z[i] = std_normal_quantile(u[i]);
  }
  return z;
}

}  // namespace

double copula_cdf(const GaussianCopula& gc, std::span<const double> u,
                  std::uint64_t seed_stream) {
  check_dim(gc, u.size(), "copula_cdf");
  std::vector<int> keep;
  for (size_t i = 0; i < u.size(); ++i) {
    if (u[i] <= 0.0) return 0.0;
    if (u[i] < 1.0) keep.push_back(static_cast<int>(i));
  }
  if (keep.empty()) return 1.0;
  std::vector<double> z(keep.size());
  for (size_t k = 0; k < keep.size(); ++k) z[k] = std_normal_quantile(u[keep[k]]);
  if (static_cast<int>(keep.size()) == gc.dim())
    return mvn_cdf(z, gc.r, gc.mvn_tol, derive_seed(gc.base_seed, seed_stream));
  return mvn_cdf(z, gc.r.submatrix(keep), gc.mvn_tol, derive_seed(gc.base_seed, seed_stream));
}

double log_copula_density(const GaussianCopula& gc, std::span<const double> u) {
  check_dim(gc, u.size(), "copula_density");
  const std::vector<double> z = to_z(u, "copula_density");
  double log_num = mvn_log_pdf(z, gc.r);
  for (double zi : z) log_num -= std_normal_log_pdf(zi);
  return log_num;
}

double copula_density(const GaussianCopula& gc, std::span<const double> u) {
  return std::exp(log_copula_density(gc, u));
}

double survival_restricted(const GaussianCopula& gc, std::span<const int> j_set,
                           std::span<const double> v, std::uint64_t seed_stream) {
  if (j_set.size() != v.size())
    throw ShapeError("survival_restricted: index/value length mismatch");
  std::vector<int> keep;
  std::vector<double> z;
  for (size_t k = 0; k < j_set.size(); ++k) {
    if (j_set[k] < 0 || j_set[k] >= gc.dim())
      throw ShapeError("survival_restricted: index out of range");
    if (v[k] <= 0.0) return 0.0;
    if (v[k] >= 1.0) continue;  // P(U > 0) = 1: unconstrained coordinate
    keep.push_back(j_set[k]);
    z.push_back(std_normal_quantile(v[k]));
  }
  if (keep.empty()) return 1.0;
  if (keep.size() == 1) return std_normal_cdf(z[0]);
  return mvn_cdf(z, gc.r.submatrix(keep), gc.mvn_tol, derive_seed(gc.base_seed, seed_stream));
}

double log_mixed_partial(const GaussianCopula& gc, std::span<const int> s_set,
                         std::span<const double> u, std::uint64_t seed_stream) {
  check_dim(gc, u.size(), "mixed_partial");
  if (s_set.empty()) throw ShapeError("mixed_partial: active set must be non-empty");
  const std::vector<double> z = to_z(u, "mixed_partial");
  const PartitionedCorrelation part = partition(gc.r, s_set);
  const int s = static_cast<int>(part.active.size());
  const int t = static_cast<int>(part.inactive.size());

  std::vector<double> zs(s);
  for (int i = 0; i < s; ++i) zs[i] = z[part.active[i]];

  double log_value = 0.0;
  if (s > 1) {  // for s == 1 the density ratio phi(z)/phi(z) is 1
    const CorrelationMatrix r_ss(part.r_ss);
    log_value = mvn_log_pdf(zs, r_ss);
    for (double zi : zs) log_value -= std_normal_log_pdf(zi);
  }

  if (t > 0) {
    std::vector<double> w(t);
    for (int i = 0; i < t; ++i) {
      double acc = z[part.inactive[i]];
      for (int k = 0; k < s; ++k) acc -= part.shift(i, k) * zs[k];
      w[i] = acc;
    }
    const double cond =
        mvn_cdf_cov(w, part.schur, gc.mvn_tol, derive_seed(gc.base_seed, seed_stream));
    log_value += std::log(std::max(cond, kLogFloor));
  }
  return log_value;
}

double mixed_partial(const GaussianCopula& gc, std::span<const int> s_set,
                     std::span<const double> u, std::uint64_t seed_stream) {
  return std::exp(log_mixed_partial(gc, s_set, u, seed_stream));
}

Matrix sample(const GaussianCopula& gc, long n, std::uint64_t seed) {
  const int d = gc.dim();
  const Matrix& l = gc.r.chol();
  Matrix out(static_cast<int>(n), d);
  Rng rng(derive_seed(seed, 0x73616d70ull));
  std::vector<double> eps(d);
  for (long row = 0; row < n; ++row) {
    for (int i = 0; i < d; ++i) eps[i] = rng.normal();
    for (int i = 0; i < d; ++i) {
      double y = 0.0;
      for (int k = 0; k <= i; ++k) y += l(i, k) * eps[k];
      out(static_cast<int>(row), i) = std_normal_cdf(y);
    }
  }
  return out;
}

namespace {

// Regularized incomplete beta via the Lentz continued fraction
// (Numerical Recipes 3rd ed., 6.4).
double beta_cont_fraction(double a, double b, double x) {
  constexpr double eps = 3e-16, fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cont_fraction(a, b, x) / a;
  return 1.0 - front * beta_cont_fraction(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, double nu) {
  if (!(nu > 0.0)) throw DomainError("student_t_cdf: nu must be positive");
  if (t == 0.0) return 0.5;
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * reg_inc_beta(0.5 * nu, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

Matrix sample_student_t(const CorrelationMatrix& r, double nu, long n, std::uint64_t seed) {
  if (!(nu > 2.0)) throw DomainError("sample_student_t: nu must exceed 2");
  const int d = r.dim();
  const Matrix& l = r.chol();
  Matrix out(static_cast<int>(n), d);
  Rng rng(derive_seed(seed, 0x74636f70ull));
  std::vector<double> eps(d);
  for (long row = 0; row < n; ++row) {
    for (int i = 0; i < d; ++i) eps[i] = rng.normal();
    const double scale = 1.0 / std::sqrt(rng.chi_square(nu) / nu);
    for (int i = 0; i < d; ++i) {
      double y = 0.0;
      for (int k = 0; k <= i; ++k) y += l(i, k) * eps[k];
      out(static_cast<int>(row), i) = student_t_cdf(y * scale, nu);
    }
  }
  return out;
}

}  // namespace combfit
