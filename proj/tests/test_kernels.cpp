#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "combfit/errors.hpp"
#include "combfit/linalg.hpp"
#include "combfit/mvn.hpp"
#include "combfit/normal.hpp"
#include "combfit/rng.hpp"

using namespace combfit;

TEST_CASE("standard normal pdf/cdf basics") {
  CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std_normal_pdf(0.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
  CHECK(std_normal_quantile(0.975) == doctest::Approx(1.9599640).epsilon(1e-6));
  CHECK(std_normal_cdf(-40.0) == 0.0);
  CHECK(std_normal_survival(3.0) == doctest::Approx(1.0 - std_normal_cdf(3.0)).epsilon(1e-12));
}

TEST_CASE("quantile is the inverse of cdf over a log-spaced grid") {
  for (double e = -12.0; e < -0.31; e += 0.25) {
    const double p = std::pow(10.0, e);
    for (double q : {p, 1.0 - p}) {
      const double x = std_normal_quantile(q);
      CHECK(std_normal_cdf(x) == doctest::Approx(q).epsilon(1e-13));
      // round trip in probability space
      CHECK(std::fabs(std_normal_cdf(std_normal_quantile(q)) - q) < 1e-10);
    }
  }
  CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
}

TEST_CASE("cholesky hand values and failure") {
  Matrix a(2, 2);
  a(0, 0) = a(1, 1) = 1.0;
  a(0, 1) = a(1, 0) = 0.5;
  const Matrix l = cholesky_lower(a);
  CHECK(l(0, 0) == doctest::Approx(1.0));
  CHECK(l(1, 0) == doctest::Approx(0.5));
  CHECK(l(1, 1) == doctest::Approx(0.8660254).epsilon(1e-7));

  CHECK_THROWS_AS(CorrelationMatrix(2, {1.0, 1.2, 1.2, 1.0}), DomainError);
  // on-diagonal PD failure carries the pivot index
  Matrix bad = Matrix::identity(3);
  bad(0, 1) = bad(1, 0) = 0.9;
  bad(0, 2) = bad(2, 0) = 0.9;
  bad(1, 2) = bad(2, 1) = -0.9;
  try {
    CorrelationMatrix c(bad);
    CHECK(false);
  } catch (const FactorizationError& e) {
    CHECK(e.pivot == 2);
  }
}

TEST_CASE("cholesky reconstructs random correlation matrices") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + static_cast<int>(gen() % 5);
    // random correlation via normalized random factor rows
    Matrix g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = unif(gen);
    Matrix r(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double num = 0.0, di = 0.0, dj = 0.0;
        for (int k = 0; k < d; ++k) {
          num += g(i, k) * g(j, k);
          di += g(i, k) * g(i, k);
          dj += g(j, k) * g(j, k);
        }
        r(i, j) = num / std::sqrt(di * dj) * (i == j ? 0.0 : 0.9);
        if (i == j) r(i, j) = 1.0;
      }
    const CorrelationMatrix corr(r);
    const Matrix& l = corr.chol();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += l(i, k) * (j >= k ? l(j, k) : 0.0);
        CHECK(std::fabs(acc - corr(i, j)) < 1e-12);
      }
  }
}

TEST_CASE("partition blocks and Schur complement") {
  const CorrelationMatrix id3 = CorrelationMatrix::identity(3);
  const int s1[] = {0};
  PartitionedCorrelation p = partition(id3, s1);
  CHECK(p.schur(0, 0) == doctest::Approx(1.0));
  CHECK(p.schur(1, 1) == doctest::Approx(1.0));
  CHECK(p.schur(0, 1) == doctest::Approx(0.0));

  // d=3 equicorrelated 0.5, S={0}: Schur complement 0.75 / 0.25
  Matrix eq(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) eq(i, j) = i == j ? 1.0 : 0.5;
  const CorrelationMatrix req(eq);
  p = partition(req, s1);
  CHECK(p.schur(0, 0) == doctest::Approx(0.75));
  CHECK(p.schur(0, 1) == doctest::Approx(0.25));

  // full active set: empty T blocks
  const int all[] = {0, 1, 2};
  p = partition(req, all);
  CHECK(p.inactive.empty());
  CHECK(p.schur.rows() == 0);
}

TEST_CASE("bvn cdf identities") {
  // orthant identity Phi2(0,0;rho) = 1/4 + asin(rho)/(2 pi)
  for (double rho = -0.9; rho < 0.95; rho += 0.1) {
    const double expect = 0.25 + std::asin(rho) / (2.0 * M_PI);
    CHECK(bvn_cdf(0.0, 0.0, rho) == doctest::Approx(expect).epsilon(1e-12));
  }
  // independence factorization
  CHECK(bvn_cdf(0.3, -1.1, 0.0) ==
        doctest::Approx(std_normal_cdf(0.3) * std_normal_cdf(-1.1)).epsilon(1e-13));
  // comonotone limit: exact value is 0.5 - asin-gap/(2 pi)
  CHECK(bvn_cdf(0.0, 0.0, 0.999999) ==
        doctest::Approx(0.25 + std::asin(0.999999) / (2.0 * M_PI)).epsilon(1e-10));
  CHECK(std::fabs(bvn_cdf(0.0, 0.0, 0.999999) - 0.5) < 1e-3);
  // monotone in arguments
  CHECK(bvn_cdf(1.0, 1.0, 0.5) > bvn_cdf(0.5, 1.0, 0.5));
}

TEST_CASE("mvn cdf closed-form cases") {
  const CorrelationMatrix id3 = CorrelationMatrix::identity(3);
  const double z0[] = {0.0, 0.0, 0.0};
  CHECK(mvn_cdf(z0, id3) == doctest::Approx(0.125).epsilon(1e-7));

  const CorrelationMatrix r2 = CorrelationMatrix::from_upper(2, std::vector<double>{0.5});
  const double z2[] = {0.0, 0.0};
  CHECK(mvn_cdf(z2, r2) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  CHECK_THROWS_AS(mvn_cdf(z2, id3), ShapeError);
}

TEST_CASE("mvn cdf at identity equals product of margins (QMC path)") {
  Rng rng(42);
  for (int d = 3; d <= 6; ++d) {
    const CorrelationMatrix id = CorrelationMatrix::identity(d);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> z(d);
      double expect = 1.0;
      for (int i = 0; i < d; ++i) {
        z[i] = 2.0 * rng.uniform() - 0.5;
        expect *= std_normal_cdf(z[i]);
      }
      CHECK(mvn_cdf(z, id, 1e-7, 11) == doctest::Approx(expect).epsilon(5e-6));
    }
  }
}

TEST_CASE("mvn cdf deterministic per seed and monotone") {
  const CorrelationMatrix r = CorrelationMatrix::from_upper(3, std::vector<double>{0.5, 0.3, 0.2});
  const std::vector<double> z{0.4, -0.2, 0.9};
  const double a = mvn_cdf(z, r, 1e-7, 123);
  const double b = mvn_cdf(z, r, 1e-7, 123);
  CHECK(a == b);
  std::vector<double> z_up{0.5, -0.1, 1.0};
  CHECK(mvn_cdf(z_up, r, 1e-7, 123) >= a - 1e-9);
}

TEST_CASE("mvn pdf closed forms") {
  const CorrelationMatrix id1 = CorrelationMatrix::identity(1);
  const double z1[] = {0.0};
  CHECK(mvn_pdf(z1, id1) == doctest::Approx(0.3989422804).epsilon(1e-9));

  const CorrelationMatrix id2 = CorrelationMatrix::identity(2);
  const double z11[] = {1.0, 1.0};
  CHECK(mvn_pdf(z11, id2) == doctest::Approx(0.05854983).epsilon(1e-7));

  const CorrelationMatrix r2 = CorrelationMatrix::from_upper(2, std::vector<double>{0.5});
  const double z00[] = {0.0, 0.0};
  CHECK(mvn_pdf(z00, r2) == doctest::Approx(1.0 / (2.0 * M_PI * std::sqrt(0.75))).epsilon(1e-12));
}

TEST_CASE("mvn pdf integrates to one (d=2 Monte Carlo band)") {
  const CorrelationMatrix r = CorrelationMatrix::from_upper(2, std::vector<double>{0.6});
  Rng rng(99);
  // importance-free box [-6,6]^2 Monte Carlo
  const long n = 1000000;
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    const double x = -6.0 + 12.0 * rng.uniform();
    const double y = -6.0 + 12.0 * rng.uniform();
    const double z[] = {x, y};
    acc += mvn_pdf(z, r);
  }
  const double integral = acc / n * 144.0;
  CHECK(integral == doctest::Approx(1.0).epsilon(0.01));
}
