#include "combfit/estimation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "combfit/errors.hpp"
#include "combfit/normal.hpp"
#include "combfit/optimize.hpp"
#include "combfit/rng.hpp"

namespace combfit {

// ---------------------------------------------------------------------------
// Angle chart
// ---------------------------------------------------------------------------

static int n_angles(int dim) { return dim * (dim - 1) / 2; }

CorrelationMatrix correlation_from_angles(const CorrelationParam& param, int dim) {
  if (static_cast<int>(param.angles.size()) != n_angles(dim))
    throw ShapeError("correlation_from_angles: angle count does not match dimension");
  for (double a : param.angles)
    if (!(a > 0.0 && a < M_PI))
      throw DomainError("correlation_from_angles: angles must lie strictly in (0, pi)");
  Matrix l(dim, dim);
  l(0, 0) = 1.0;
  size_t k = 0;
  for (int i = 1; i < dim; ++i) {
    double prod = 1.0;
    for (int j = 0; j < i; ++j) {
      const double a = param.angles[k++];
      l(i, j) = std::cos(a) * prod;
      prod *= std::sin(a);
    }
    l(i, i) = prod;
  }
  Matrix r(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int t = 0; t <= j; ++t) acc += l(i, t) * l(j, t);
      r(i, j) = r(j, i) = acc;
    }
  for (int i = 0; i < dim; ++i) r(i, i) = 1.0;
  return CorrelationMatrix(std::move(r));
}

CorrelationParam angles_from_correlation(const CorrelationMatrix& r) {
  const int dim = r.dim();
  const Matrix& l = r.chol();
  CorrelationParam param;
  param.angles.reserve(n_angles(dim));
  for (int i = 1; i < dim; ++i) {
    double prod = 1.0;
    for (int j = 0; j < i; ++j) {
      const double c = std::clamp(l(i, j) / prod, -1.0, 1.0);
      const double a = std::acos(c);
      param.angles.push_back(a);
      prod *= std::sin(a);
    }
  }
  return param;
}

// ---------------------------------------------------------------------------
// Spearman machinery
// ---------------------------------------------------------------------------

double spearman_transform(double rho) {
  if (!(std::fabs(rho) <= 1.0)) throw DomainError("spearman_transform: |rho| must be <= 1");
  return 2.0 * std::sin(M_PI * rho / 6.0);
}

double spearman_transform_inverse(double r) {
  if (!(std::fabs(r) <= 2.0)) throw DomainError("spearman_transform_inverse: out of range");
  return 6.0 / M_PI * std::asin(r / 2.0);
}

std::vector<double> midranks(std::span<const double> v) {
  const size_t n = v.size();
  std::vector<int> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[ord[j + 1]] == v[ord[i]]) ++j;
    const double mid = 0.5 * (i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[ord[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double sample_spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ShapeError("sample_spearman: inputs must have equal length >= 2");
  const std::vector<double> rx = midranks(x);
  const std::vector<double> ry = midranks(y);
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DomainError("sample_spearman: constant input has no rank correlation");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

struct TieBlock {
  std::vector<int> positions;
  int rank_lo;  // ranks rank_lo+1 .. rank_lo+len are admissible within the block
};

std::vector<TieBlock> tie_blocks(std::span<const double> v, std::vector<double>* fixed_ranks) {
  const size_t n = v.size();
  std::vector<int> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<TieBlock> blocks;
  fixed_ranks->assign(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[ord[j + 1]] == v[ord[i]]) ++j;
    if (j == i) {
      (*fixed_ranks)[ord[i]] = static_cast<double>(i + 1);
    } else {
      TieBlock b;
      b.rank_lo = static_cast<int>(i);
      for (size_t k = i; k <= j; ++k) b.positions.push_back(ord[k]);
      blocks.push_back(std::move(b));
    }
    i = j + 1;
  }
  return blocks;
}

// Rearrangement step: hand the block's rank range to its rows sorted by the
// partner ranks, co-monotone for the maximum and anti-monotone for the
// minimum (ties broken by row index so the pass is deterministic).
void assign_blocks(const std::vector<TieBlock>& blocks, const std::vector<double>& partner,
                   bool maximize, std::vector<double>* ranks) {
  for (const TieBlock& b : blocks) {
    std::vector<int> pos = b.positions;
    std::sort(pos.begin(), pos.end(), [&](int a, int c) {
      if (partner[a] != partner[c])
        return maximize ? partner[a] < partner[c] : partner[a] > partner[c];
      return a < c;
    });
    for (size_t k = 0; k < pos.size(); ++k)
      (*ranks)[pos[k]] = static_cast<double>(b.rank_lo + 1 + k);
  }
}

double rank_product_rho(const std::vector<double>& rx, const std::vector<double>& ry) {
  const double n = static_cast<double>(rx.size());
  double s = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) s += rx[i] * ry[i];
  const double mean = 0.5 * (n + 1.0);
  const double var = (n * n - 1.0) / 12.0;
  return (s / n - mean * mean) / var;
}

double extreme_spearman(std::span<const double> x, std::span<const double> y, bool maximize) {
  std::vector<double> rx_fixed, ry_fixed;
  const std::vector<TieBlock> bx = tie_blocks(x, &rx_fixed);
  const std::vector<TieBlock> by = tie_blocks(y, &ry_fixed);

  // Alternate the block rearrangements until the rank product settles.
  std::vector<double> rx = rx_fixed, ry = ry_fixed;
  assign_blocks(bx, midranks(y), maximize, &rx);
  assign_blocks(by, rx, maximize, &ry);
  double best = rank_product_rho(rx, ry);
  for (int pass = 0; pass < 64; ++pass) {
    assign_blocks(bx, ry, maximize, &rx);
    assign_blocks(by, rx, maximize, &ry);
    const double rho = rank_product_rho(rx, ry);
    const bool improved = maximize ? rho > best + 1e-15 : rho < best - 1e-15;
    if (!improved) break;
    best = rho;
  }
  return std::clamp(best, -1.0, 1.0);
}

}  // namespace

SpearmanBounds spearman_bounds(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("spearman_bounds: inputs differ in length");
  if (x.size() < 3) throw ShapeError("spearman_bounds: need at least 3 observations");
  const auto constant = [](std::span<const double> v) {
    for (double t : v)
      if (t != v[0]) return false;
    return true;
  };
  if (constant(x) || constant(y)) return {-1.0, 1.0, true};
  SpearmanBounds b;
  b.lo = extreme_spearman(x, y, /*maximize=*/false);
  b.hi = extreme_spearman(x, y, /*maximize=*/true);
  b.degenerate = false;
  return b;
}

// ---------------------------------------------------------------------------
// IFM fit
// ---------------------------------------------------------------------------

namespace {

// Shrink toward independence until the matrix passes the correlation
// invariants; the warm start only needs to be a feasible point.
CorrelationMatrix project_to_valid(int dim, const std::vector<double>& upper) {
  double lambda = 1.0;
  for (int it = 0; it < 60; ++it) {
    std::vector<double> scaled(upper.size());
    for (size_t i = 0; i < upper.size(); ++i)
      scaled[i] = std::clamp(lambda * upper[i], -0.999, 0.999);
    try {
      return CorrelationMatrix::from_upper(dim, scaled);
    } catch (const Error&) {
      lambda *= 0.85;
    }
  }
  return CorrelationMatrix::identity(dim);
}

}  // namespace

CombBernoulliModel FitReport::to_model(double mvn_tol, std::uint64_t base_seed) const {
  CombBernoulliModel model;
  for (const MarginalFit& mf : marginals) model.marginals.push_back(mf.marginal);
  model.copula = GaussianCopula{correlation, mvn_tol, base_seed};
  return model;
}

FitReport fit_ifm(const ClaimSeries& series, const FitOptions& opts) {
  series.validate();
  const int d = series.n_cols;
  if (series.n_rows < d + 2) throw DomainError("fit_ifm: need at least d+2 observations");

  // Stage 1: closed-form marginal MLEs.
  std::vector<MarginalFit> marginals;
  std::vector<MixedMarginal> mixed;
  for (int c = 0; c < d; ++c) {
    marginals.push_back(fit_marginal(series.column(c)));
    mixed.push_back(marginals.back().marginal);
  }

  const int na = n_angles(d);
  if (na == 0) {
    LikelihoodDiagnostics diag;
    CombBernoulliModel m{mixed, GaussianCopula{CorrelationMatrix::identity(d), opts.mvn_tol,
                                               opts.seed}};
    const double ll = log_likelihood(m, series, &diag);
    return FitReport{std::move(marginals), CorrelationMatrix::identity(d), ll, 0, true,
                     diag.clamp_count, {}};
  }

  // Stage 2: maximize over the angle chart with the marginals frozen.
  const LikelihoodEvaluator evaluator(mixed, series, opts.mvn_tol, opts.seed);
  auto objective = [&](std::span<const double> a) -> double {
    for (double v : a)
      if (!(v > 1e-9 && v < M_PI - 1e-9)) return -1e100;
    try {
      CorrelationParam p{std::vector<double>(a.begin(), a.end())};
      return evaluator.eval(correlation_from_angles(p, d));
    } catch (const Error&) {
      return -1e100;
    }
  };

  // Warm start: transformed midpoints of the pairwise Spearman tie bounds.
  std::vector<double> warm_upper;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const std::vector<double> xi = series.column(i);
      const std::vector<double> xj = series.column(j);
      const SpearmanBounds sb = spearman_bounds(xi, xj);
      const double mid = sb.degenerate ? 0.0 : 0.5 * (sb.lo + sb.hi);
      warm_upper.push_back(std::clamp(spearman_transform(mid), -0.95, 0.95));
    }
  const CorrelationParam warm = angles_from_correlation(project_to_valid(d, warm_upper));

  NelderMeadOptions nm;
  nm.tol_x = opts.tol;
  nm.tol_f = 1e-8;
  nm.max_iter = opts.max_iter;

  Rng rng(derive_seed(opts.seed, 0x1f111ull));
  NelderMeadResult best;
  best.f = -std::numeric_limits<double>::infinity();
  long total_iters = 0;
  for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
    std::vector<double> x0(na);
    if (restart == 0) {
      x0 = warm.angles;
    } else {
      for (int k = 0; k < na; ++k) x0[k] = std::acos(-0.8 + 1.6 * rng.uniform());
    }
    NelderMeadResult run = nelder_mead_maximize(objective, x0, 0.15, nm);
    total_iters += run.iterations;
    const bool better =
        run.f > best.f || (run.f == best.f && run.x < best.x);  // deterministic tie-break
    if (better) best = std::move(run);
  }

  LikelihoodDiagnostics diag;
  const CorrelationMatrix r_hat =
      correlation_from_angles(CorrelationParam{best.x}, d);
  const double ll = evaluator.eval(r_hat, &diag);
  return FitReport{std::move(marginals), r_hat,          ll, total_iters,
                   best.converged,       diag.clamp_count, {}};
}

// ---------------------------------------------------------------------------
// Limit likelihood (continuous-marginal regime)
// ---------------------------------------------------------------------------

double limit_loglik(std::span<const MixedMarginal> marginals, const CorrelationMatrix& r,
                    const ClaimSeries& series, long* n_zero_flagged) {
  if (series.n_cols != static_cast<int>(marginals.size()) || series.n_cols != r.dim())
    throw ShapeError("limit_loglik: dimension mismatch");
  series.validate();
  long flagged = 0;
  double total = 0.0;
  std::vector<double> z(series.n_cols);
  for (long row = 0; row < series.n_rows; ++row) {
    for (int i = 0; i < series.n_cols; ++i) {
      const double x = series.at(row, i);
      double u = marginals[i].severity->cdf(x);
      if (u < 1e-12) {
        u = 1e-12;
        ++flagged;
      }
      if (u > 1.0 - 1e-12) u = 1.0 - 1e-12;
      z[i] = std_normal_quantile(u);
      if (x > 0.0) total += marginals[i].severity->log_pdf(x);
    }
    double log_c = mvn_log_pdf(z, r);
    for (double zi : z) log_c -= std_normal_log_pdf(zi);
    total += log_c;
  }
  if (n_zero_flagged) *n_zero_flagged = flagged;
  return total;
}

// ---------------------------------------------------------------------------
// Zero-mixed benchmark
// ---------------------------------------------------------------------------

ZeroMixedReport zero_mixed_fit(const ClaimSeries& series, const ZeroMixedOptions& opts) {
  series.validate();
  const int d = series.n_cols;
  if (d > 4)
    throw DomainError("zero_mixed_fit: the construct is exponential in d; d > 4 refused");

  ZeroMixedReport report;
  report.n_rows = series.n_rows;
  report.dim = d;
  for (int c = 0; c < d; ++c) report.severities.push_back(fit_marginal(series.column(c)));

  // Bonferroni budget: every occurrence probability plus every copula entry
  // the construct would ask for.
  long m = 1L << d;
  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    const int k = std::popcount(mask);
    if (k >= 2) m += k * (k - 1) / 2;
  }
  report.parameter_count = m;
  const double z_bonf = std_normal_quantile(1.0 - opts.alpha / (2.0 * static_cast<double>(m)));

  // Bucket rows by exact active set.
  std::vector<std::vector<long>> rows_by_mask(1u << d);
  for (long r = 0; r < series.n_rows; ++r) {
    std::uint32_t mask = 0;
    for (int c = 0; c < d; ++c)
      if (series.at(r, c) > 0.0) mask |= (1u << c);
    rows_by_mask[mask].push_back(r);
  }

  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    ZeroMixedSubset sub;
    for (int c = 0; c < d; ++c)
      if (mask & (1u << c)) sub.indices.push_back(c);
    const auto& rows = rows_by_mask[mask];
    sub.count = static_cast<long>(rows.size());
    const double n = static_cast<double>(series.n_rows);
    sub.p_hat = sub.count / n;
    if (sub.count == 0 || sub.count == series.n_rows) {
      sub.p_ci = {0.0, 1.0};
    } else {
      const double half = z_bonf * std::sqrt(sub.p_hat * (1.0 - sub.p_hat) / n);
      sub.p_ci = {std::max(0.0, sub.p_hat - half), std::min(1.0, sub.p_hat + half)};
    }

    const int k = static_cast<int>(sub.indices.size());
    if (k >= 2) {
      if (sub.count < 3) {
        sub.undetermined = true;
        sub.wide = true;
      } else {
        // Pseudo-observations through the severity cdfs fitted on all
        // positives of each column.
        const long nk = sub.count;
        std::vector<double> z(static_cast<size_t>(nk) * k);
        for (long ri = 0; ri < nk; ++ri)
          for (int c = 0; c < k; ++c) {
            const int col = sub.indices[c];
            double u = report.severities[col].marginal.severity->cdf(series.at(rows[ri], col));
            u = std::clamp(u, 1e-12, 1.0 - 1e-12);
            z[static_cast<size_t>(ri) * k + c] = std_normal_quantile(u);
          }
        auto objective = [&](std::span<const double> a) -> double {
          for (double v : a)
            if (!(v > 1e-9 && v < M_PI - 1e-9)) return -1e100;
          try {
            const CorrelationMatrix rr =
                correlation_from_angles(CorrelationParam{{a.begin(), a.end()}}, k);
            double ll = 0.0;
            for (long ri = 0; ri < nk; ++ri) {
              std::span<const double> zi(z.data() + static_cast<size_t>(ri) * k,
                                         static_cast<size_t>(k));
              ll += mvn_log_pdf(zi, rr);
              for (double t : zi) ll -= std_normal_log_pdf(t);
            }
            return ll;
          } catch (const Error&) {
            return -1e100;
          }
        };
        // Warm start from the sample correlation of the z scores.
        std::vector<double> warm;
        for (int a = 0; a < k; ++a)
          for (int b = a + 1; b < k; ++b) {
            double sab = 0.0, saa = 0.0, sbb = 0.0;
            for (long ri = 0; ri < nk; ++ri) {
              const double za = z[static_cast<size_t>(ri) * k + a];
              const double zb = z[static_cast<size_t>(ri) * k + b];
              sab += za * zb;
              saa += za * za;
              sbb += zb * zb;
            }
            warm.push_back(std::clamp(sab / std::sqrt(saa * sbb), -0.95, 0.95));
          }
        const CorrelationParam warm_angles = angles_from_correlation(project_to_valid(k, warm));
        NelderMeadOptions nm;
        nm.tol_x = 1e-5;
        nm.max_iter = 400;
        NelderMeadResult best = nelder_mead_maximize(objective, warm_angles.angles, 0.2, nm);
        std::vector<double> flat(k * (k - 1) / 2, M_PI / 2.0);
        NelderMeadResult alt = nelder_mead_maximize(objective, flat, 0.2, nm);
        if (alt.f > best.f) best = std::move(alt);

        const CorrelationMatrix r_hat =
            correlation_from_angles(CorrelationParam{best.x}, k);
        sub.correlation = r_hat.upper_entries();
        for (double rho : sub.correlation) {
          Interval ci{-1.0, 1.0};
          if (sub.count >= 4) {
            const double zf = std::atanh(std::clamp(rho, -0.999999, 0.999999));
            const double half = z_bonf / std::sqrt(static_cast<double>(sub.count - 3));
            ci = {std::tanh(zf - half), std::tanh(zf + half)};
          }
          sub.correlation_ci.push_back(ci);
          if (ci.hi - ci.lo >= 1.0) sub.wide = true;
        }
      }
    }
    report.subsets.push_back(std::move(sub));
  }
  return report;
}

}  // namespace combfit
