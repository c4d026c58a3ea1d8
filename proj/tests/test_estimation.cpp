#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "combfit/errors.hpp"
#include "combfit/estimation.hpp"
#include "combfit/model.hpp"
#include "combfit/optimize.hpp"
#include "combfit/rng.hpp"

using namespace combfit;

TEST_CASE("angle chart basics") {
  // d=2: rho = cos(theta)
  CHECK(correlation_from_angles({{M_PI / 3.0}}, 2)(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(correlation_from_angles({{M_PI / 2.0}}, 2)(0, 1) == doctest::Approx(0.0).epsilon(1e-12));

  // identity maps to all right angles
  const CorrelationParam p = angles_from_correlation(CorrelationMatrix::identity(4));
  for (double a : p.angles) CHECK(a == doctest::Approx(M_PI / 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(correlation_from_angles({{0.0}}, 2), DomainError);
  CHECK_THROWS_AS(correlation_from_angles({{M_PI}}, 2), DomainError);
  CHECK_THROWS_AS(correlation_from_angles({{0.5, 0.5}}, 2), ShapeError);
}

TEST_CASE("angle chart round trip and always-valid image") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(rng.raw() % 7);
    CorrelationParam p;
    for (int k = 0; k < d * (d - 1) / 2; ++k) p.angles.push_back(0.2 + 2.7 * rng.uniform());
    // image is a valid correlation matrix by construction (ctor validates)
    const CorrelationMatrix r = correlation_from_angles(p, d);
    const CorrelationParam back = angles_from_correlation(r);
    for (size_t k = 0; k < p.angles.size(); ++k)
      CHECK(back.angles[k] == doctest::Approx(p.angles[k]).epsilon(1e-10));
    const CorrelationMatrix r2 = correlation_from_angles(back, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) CHECK(std::fabs(r2(i, j) - r(i, j)) < 1e-12);
  }
}

TEST_CASE("nelder-mead maximizes a smooth concave function") {
  auto f = [](std::span<const double> x) {
    return -(x[0] - 1.5) * (x[0] - 1.5) - 2.0 * (x[1] + 0.5) * (x[1] + 0.5);
  };
  NelderMeadOptions opts;
  opts.tol_x = 1e-7;
  opts.tol_f = 1e-12;
  opts.max_iter = 500;
  const std::vector<double> x0{0.0, 0.0};
  const NelderMeadResult res = nelder_mead_maximize(f, x0, 0.5, opts);
  CHECK(res.converged);
  CHECK(res.x[0] == doctest::Approx(1.5).epsilon(1e-4));
  CHECK(res.x[1] == doctest::Approx(-0.5).epsilon(1e-4));
  // the best-value trace never decreases
  for (size_t i = 1; i < res.best_trace.size(); ++i)
    CHECK(res.best_trace[i] >= res.best_trace[i - 1] - 1e-15);
}

TEST_CASE("spearman transform closed form") {
  CHECK(spearman_transform(0.0) == 0.0);
  CHECK(spearman_transform(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(spearman_transform(0.5) == doctest::Approx(0.5176381).epsilon(1e-7));
  CHECK(spearman_transform_inverse(spearman_transform(0.37)) ==
        doctest::Approx(0.37).epsilon(1e-12));
  CHECK_THROWS_AS(spearman_transform(1.5), DomainError);
}

TEST_CASE("midranks with ties") {
  const std::vector<double> v{3.0, 1.0, 1.0, 2.0};
  const std::vector<double> r = midranks(v);
  CHECK(r == std::vector<double>{4.0, 1.5, 1.5, 3.0});
}

namespace {

// Exhaustive oracle: enumerate every admissible rank assignment within the
// tied blocks of both inputs.
struct BlockEnum {
  std::vector<std::vector<int>> blocks;  // positions per tied block
  std::vector<double> base;              // fixed ranks for untied entries
};

BlockEnum blocks_of(const std::vector<double>& v) {
  BlockEnum be;
  const size_t n = v.size();
  std::vector<int> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return v[a] < v[b]; });
  be.base.assign(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[ord[j + 1]] == v[ord[i]]) ++j;
    std::vector<int> blk;
    for (size_t k = i; k <= j; ++k) {
      blk.push_back(ord[k]);
      be.base[ord[k]] = static_cast<double>(k + 1);
    }
    if (blk.size() > 1) be.blocks.push_back(blk);
    i = j + 1;
  }
  return be;
}

void enumerate_ranks(const BlockEnum& be, size_t bi, std::vector<double>& ranks,
                     const std::function<void(const std::vector<double>&)>& emit) {
  if (bi == be.blocks.size()) {
    emit(ranks);
    return;
  }
  const auto& blk = be.blocks[bi];
  std::vector<double> slots;
  for (int pos : blk) slots.push_back(be.base[pos]);
  std::sort(slots.begin(), slots.end());
  std::vector<int> perm(blk.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (size_t k = 0; k < blk.size(); ++k) ranks[blk[k]] = slots[perm[k]];
    enumerate_ranks(be, bi + 1, ranks, emit);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

std::pair<double, double> brute_force_bounds(const std::vector<double>& x,
                                             const std::vector<double>& y) {
  const BlockEnum bx = blocks_of(x);
  const BlockEnum by = blocks_of(y);
  const double n = static_cast<double>(x.size());
  const double mean = 0.5 * (n + 1.0);
  const double var = (n * n - 1.0) / 12.0;
  double lo = 2.0, hi = -2.0;
  std::vector<double> rx = bx.base, ry = by.base;
  enumerate_ranks(bx, 0, rx, [&](const std::vector<double>& r1) {
    enumerate_ranks(by, 0, ry, [&](const std::vector<double>& r2) {
      double s = 0.0;
      for (size_t i = 0; i < r1.size(); ++i) s += r1[i] * r2[i];
      const double rho = (s / n - mean * mean) / var;
      lo = std::min(lo, rho);
      hi = std::max(hi, rho);
    });
  });
  return {lo, hi};
}

double block_work(const std::vector<double>& v) {
  double w = 1.0;
  for (const auto& blk : blocks_of(v).blocks) {
    double f = 1.0;
    for (size_t k = 2; k <= blk.size(); ++k) f *= static_cast<double>(k);
    w *= f;
  }
  return w;
}

}  // namespace

TEST_CASE("spearman bounds: untied inputs collapse to the sample value") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(12), y(12);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    const SpearmanBounds b = spearman_bounds(x, y);
    const double s = sample_spearman(x, y);
    CHECK(b.lo == doctest::Approx(s).epsilon(1e-12));
    CHECK(b.hi == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("spearman bounds: hand-checkable tiny case") {
  // x = y = [0,0,1]: the zero block of each side carries ranks {1,2}
  const std::vector<double> x{0.0, 0.0, 1.0};
  const SpearmanBounds b = spearman_bounds(x, x);
  const auto [lo, hi] = brute_force_bounds(x, x);
  CHECK(b.lo == doctest::Approx(lo).epsilon(1e-12));
  CHECK(b.hi == doctest::Approx(hi).epsilon(1e-12));
  CHECK(b.hi == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spearman bounds equal brute force exhaustively (n = 4, entries {0,1,2})") {
  std::vector<double> x(4), y(4);
  for (int cx = 0; cx < 81; ++cx) {
    int t = cx;
    for (int i = 0; i < 4; ++i) {
      x[i] = t % 3;
      t /= 3;
    }
    const auto all_same = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
    };
    if (all_same(x)) continue;
    for (int cy = 0; cy < 81; ++cy) {
      t = cy;
      for (int i = 0; i < 4; ++i) {
        y[i] = t % 3;
        t /= 3;
      }
      if (all_same(y)) continue;
      const SpearmanBounds b = spearman_bounds(x, y);
      const auto [lo, hi] = brute_force_bounds(x, y);
      CHECK(b.lo == doctest::Approx(lo).epsilon(1e-10));
      CHECK(b.hi == doctest::Approx(hi).epsilon(1e-10));
    }
  }
}

TEST_CASE("spearman bounds equal brute force on random tied vectors (n = 5..7)") {
  Rng rng(99);
  int done = 0;
  while (done < 400) {
    const int n = 5 + static_cast<int>(rng.raw() % 3);
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng.raw() % 3);
    for (auto& v : y) v = static_cast<double>(rng.raw() % 3);
    const auto all_same = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
    };
    if (all_same(x) || all_same(y)) continue;
    if (block_work(x) * block_work(y) > 30000.0) continue;
    const SpearmanBounds b = spearman_bounds(x, y);
    const auto [lo, hi] = brute_force_bounds(x, y);
    CHECK(b.lo == doctest::Approx(lo).epsilon(1e-10));
    CHECK(b.hi == doctest::Approx(hi).epsilon(1e-10));
    ++done;
  }
}

TEST_CASE("spearman bounds degenerate constant input") {
  const std::vector<double> c{2.0, 2.0, 2.0, 2.0};
  const std::vector<double> y{1.0, 2.0, 3.0, 4.0};
  const SpearmanBounds b = spearman_bounds(c, y);
  CHECK(b.degenerate);
  CHECK(b.lo == -1.0);
  CHECK(b.hi == 1.0);
  CHECK_THROWS_AS(spearman_bounds(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}),
                  ShapeError);
}

TEST_CASE("limit loglik: identity copula leaves only severity terms") {
  std::vector<MixedMarginal> marg{make_lognormal_marginal(1.0, 0.0, 1.0),
                                  make_lognormal_marginal(1.0, 0.4, 0.7)};
  CombBernoulliModel m{marg, GaussianCopula{CorrelationMatrix::identity(2), 1e-7, 0}};
  const ClaimSeries s = simulate(m, 100, 64);
  double severity_only = 0.0;
  for (long r = 0; r < s.n_rows; ++r)
    for (int c = 0; c < 2; ++c) severity_only += marg[c].severity->log_pdf(s.at(r, c));
  CHECK(limit_loglik(marg, CorrelationMatrix::identity(2), s) ==
        doctest::Approx(severity_only).epsilon(1e-10));

  // zero entries are flagged
  ClaimSeries with_zero = s;
  with_zero.at(0, 0) = 0.0;
  long flagged = 0;
  limit_loglik(marg, CorrelationMatrix::identity(2), with_zero, &flagged);
  CHECK(flagged == 1);
}

TEST_CASE("fit_ifm: null model keeps correlations inside the noise band") {
  std::vector<MixedMarginal> marg{make_lognormal_marginal(0.5, 0.0, 1.0),
                                  make_lognormal_marginal(0.6, 0.3, 0.8)};
  CombBernoulliModel truth{marg, GaussianCopula{CorrelationMatrix::identity(2), 1e-7, 0}};
  const long n = 2000;
  const ClaimSeries s = simulate(truth, n, 17);
  FitOptions opts;
  opts.seed = 7;
  opts.restarts = 2;
  const FitReport fit = fit_ifm(s, opts);
  CHECK(fit.converged);
  CHECK(std::fabs(fit.correlation(0, 1)) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fit_ifm recovers a known bivariate correlation") {
  std::vector<MixedMarginal> marg{make_lognormal_marginal(0.45, 0.0, 1.0),
                                  make_lognormal_marginal(0.35, -0.2, 1.1)};
  CombBernoulliModel truth{
      marg, GaussianCopula{CorrelationMatrix::from_upper(2, std::vector<double>{0.65}), 1e-7, 0}};
  const ClaimSeries s = simulate(truth, 3000, 23);
  FitOptions opts;
  opts.seed = 19;
  const FitReport fit = fit_ifm(s, opts);
  CHECK(fit.converged);
  CHECK(std::fabs(fit.correlation(0, 1) - 0.65) < 0.06);
  CHECK_THROWS_AS(fit_ifm(ClaimSeries{2, 2, {0.0, 1.0, 2.0, 0.0}, {}}, opts), DomainError);
}

TEST_CASE("zero-mixed fit: all-positive data leaves one copula") {
  std::vector<MixedMarginal> marg{make_lognormal_marginal(1.0, 0.0, 1.0),
                                  make_lognormal_marginal(1.0, 0.2, 0.9)};
  CombBernoulliModel m{
      marg, GaussianCopula{CorrelationMatrix::from_upper(2, std::vector<double>{0.5}), 1e-7, 0}};
  const ClaimSeries s = simulate(m, 1500, 11);
  const ZeroMixedReport report = zero_mixed_fit(s);
  REQUIRE(report.subsets.size() == 4);
  for (const auto& sub : report.subsets) {
    if (sub.indices.size() == 2) {
      CHECK(sub.p_hat == doctest::Approx(1.0));
      REQUIRE(sub.correlation.size() == 1);
      CHECK(std::fabs(sub.correlation[0] - 0.5) < 0.08);
      CHECK_FALSE(sub.undetermined);
    } else {
      CHECK(sub.p_hat == 0.0);
    }
  }
  // occurrence probabilities sum to one over the 2^d patterns
  double total = 0.0;
  for (const auto& sub : report.subsets) total += sub.p_hat;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero-mixed fit: scarce subsets are undetermined, d > 4 refused") {
  // hand-built series: pattern {0,1} appears twice only
  ClaimSeries s;
  s.n_rows = 8;
  s.n_cols = 2;
  s.values = {1.0, 2.0, 0.5, 0.2, 0.0, 0.0, 0.0, 0.0,
              1.0, 0.0, 0.0, 3.0, 2.0, 0.0, 0.0, 0.0};
  const ZeroMixedReport report = zero_mixed_fit(s);
  for (const auto& sub : report.subsets)
    if (sub.indices.size() == 2) {
      CHECK(sub.count == 2);
      CHECK(sub.undetermined);
      CHECK(sub.wide);
    }

  ClaimSeries wide;
  wide.n_rows = 2;
  wide.n_cols = 5;
  wide.values.assign(10, 1.0);
  CHECK_THROWS_AS(zero_mixed_fit(wide), DomainError);
}

TEST_CASE("prop 3.5 consistency of the transformed Spearman estimator") {
  Rng rng(2718);
  const long n = 10000;
  for (double R : {0.2, 0.5, 0.8}) {
    CombBernoulliModel m{{make_lognormal_marginal(1.0, 0.0, 1.0),
                          make_lognormal_marginal(1.0, 0.0, 1.0)},
                         GaussianCopula{CorrelationMatrix::from_upper(2, std::vector<double>{R}),
                                        1e-7, 0}};
    const ClaimSeries s = simulate(m, n, 5000 + static_cast<std::uint64_t>(R * 100));
    const double rho_hat = sample_spearman(s.column(0), s.column(1));
    CHECK(std::fabs(spearman_transform(rho_hat) - R) <
          4.0 * (1.0 - R * R) / std::sqrt(static_cast<double>(n)));
  }
}
