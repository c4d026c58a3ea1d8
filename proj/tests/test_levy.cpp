#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "combfit/errors.hpp"
#include "combfit/levy.hpp"
#include "combfit/model.hpp"
#include "combfit/rng.hpp"

using namespace combfit;

namespace {

CombBernoulliModel model2(double p1, double p2, double rho) {
  return CombBernoulliModel{
      {make_lognormal_marginal(p1, 0.0, 1.0), make_lognormal_marginal(p2, 0.3, 0.8)},
      GaussianCopula{CorrelationMatrix::from_upper(2, std::vector<double>{rho}), 1e-7, 0}};
}

}  // namespace

TEST_CASE("intensities from an independent model factorize") {
  const CombBernoulliModel m = model2(0.1, 0.2, 0.0);
  const IntensitySet is = intensities_from_model(m, 1.0, 10.0);
  CHECK(is.lambda_perp.at(1u) == doctest::Approx(0.1 * 0.8).epsilon(1e-9));
  CHECK(is.lambda_perp.at(2u) == doctest::Approx(0.9 * 0.2).epsilon(1e-9));
  CHECK(is.lambda_perp.at(3u) == doctest::Approx(0.02).epsilon(1e-9));
}

TEST_CASE("component intensities telescope back to the marginal rates") {
  const double dt = 0.25;
  const CombBernoulliModel m = model2(0.3, 0.45, 0.6);
  const IntensitySet is = intensities_from_model(m, dt, 5.0);
  CHECK(is.component_lambda(0) * dt == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(is.component_lambda(1) * dt == doctest::Approx(0.45).epsilon(1e-9));
  // total intensity equals the any-jump probability over dt
  const double p_none =
      copula_cdf(m.copula, std::vector<double>{1.0 - 0.3, 1.0 - 0.45});
  CHECK(is.total() * dt == doctest::Approx(1.0 - p_none).epsilon(1e-9));
}

TEST_CASE("trivariate intensity sums against a correlated model") {
  CombBernoulliModel m{{make_lognormal_marginal(0.38, 0.55, 0.81),
                        make_lognormal_marginal(0.34, -0.21, 1.30),
                        make_lognormal_marginal(0.14, -1.19, 1.43)},
                       GaussianCopula{CorrelationMatrix::from_upper(
                                          3, std::vector<double>{0.761, 0.667, 0.789}),
                                      1e-7, 0}};
  const IntensitySet is = intensities_from_model(m, 1.0, 1.0);
  for (int i = 0; i < 3; ++i)
    CHECK(is.component_lambda(i) == doctest::Approx(m.marginals[i].p).epsilon(1e-7));
}

TEST_CASE("levy simulation: subset counts follow their Poisson means") {
  const CombBernoulliModel m = model2(0.4, 0.5, 0.0);
  const double horizon = 400.0;
  const IntensitySet is = intensities_from_model(m, 1.0, horizon);
  std::map<std::uint32_t, double> avg;
  const int runs = 60;
  for (int run = 0; run < runs; ++run) {
    const auto events = simulate_levy(is, m, 1000 + run);
    std::map<std::uint32_t, long> counts;
    for (const auto& ev : events) ++counts[ev.mask];
    for (const auto& [mask, c] : counts) avg[mask] += static_cast<double>(c) / runs;
  }
  for (const auto& [mask, lam] : is.lambda_perp) {
    const double mean = lam * horizon;
    const double band = 4.0 * std::sqrt(mean / runs) + 1e-9;
    CHECK(std::fabs(avg[mask] - mean) < band);
  }
  // bivariate model instantiates exactly 3 subset processes
  CHECK(is.lambda_perp.size() == 3);
}

TEST_CASE("levy simulation severities respect the conditional pattern") {
  const CombBernoulliModel m = model2(0.35, 0.3, 0.5);
  const IntensitySet is = intensities_from_model(m, 1.0, 300.0);
  const auto events = simulate_levy(is, m, 77);
  CHECK(!events.empty());
  for (const auto& ev : events) {
    CHECK(ev.time > 0.0);
    CHECK(ev.time <= 300.0);
    for (int i = 0; i < 2; ++i) {
      if (ev.mask & (1u << i))
        CHECK(ev.losses[i] > 0.0);
      else
        CHECK(ev.losses[i] == 0.0);
    }
  }
  // deterministic per seed
  const auto again = simulate_levy(is, m, 77);
  REQUIRE(again.size() == events.size());
  for (size_t i = 0; i < events.size(); ++i) CHECK(again[i].time == events[i].time);
  // time-sorted
  for (size_t i = 1; i < events.size(); ++i) CHECK(events[i - 1].time <= events[i].time);
}

TEST_CASE("clayton levy copula closed forms") {
  const ClaytonLevyCopula c{1.7};
  // equal arguments: F(l, l) = l 2^(-1/delta)
  for (double lam : {0.2, 1.0, 3.5})
    CHECK(c.value(lam, lam) == doctest::Approx(lam * std::pow(2.0, -1.0 / 1.7)).epsilon(1e-12));
  CHECK(c.value(0.5, 4.0) <= 0.5);
  CHECK(c.value(0.5, 4.0) <= 4.0);

  // partial derivatives against central finite differences
  const double h = 1e-6;
  for (double u : {0.3, 1.2})
    for (double v : {0.6, 2.5}) {
      const double fd_u = (c.value(u + h, v) - c.value(u - h, v)) / (2.0 * h);
      CHECK(c.du(u, v) == doctest::Approx(fd_u).epsilon(1e-6));
      const double fd_uv =
          (c.value(u + h, v + h) - c.value(u + h, v - h) - c.value(u - h, v + h) +
           c.value(u - h, v - h)) /
          (4.0 * h * h);
      CHECK(c.dudv(u, v) == doctest::Approx(fd_uv).epsilon(1e-4));
    }
  CHECK_THROWS_AS(c.value(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(ClaytonLevyCopula{-0.5}.value(1.0, 1.0), ParameterError);
}

TEST_CASE("clayton-induced intensities") {
  const ClaytonLevyCopula c{1.2};
  const BivariateIntensities lam = clayton_intensities(2.0, 3.0, c);
  CHECK(lam.joint == doctest::Approx(c.value(2.0, 3.0)).epsilon(1e-12));
  CHECK(lam.only_first == doctest::Approx(2.0 - lam.joint).epsilon(1e-12));
  CHECK(lam.only_second == doctest::Approx(3.0 - lam.joint).epsilon(1e-12));
  CHECK(lam.only_first >= 0.0);
  CHECK(lam.only_second >= 0.0);
}

TEST_CASE("continuous-time likelihood factorizes in the independence limit") {
  // delta -> 0+: F ~ 0, so the likelihood splits into two independent
  // compound-Poisson likelihoods.
  const LognormalSeverity s1{0.0, 1.0}, s2{0.3, 0.8};
  const double lam1 = 1.4, lam2 = 0.9, horizon = 20.0;

  std::vector<LevyEvent> events;
  Rng rng(5);
  for (int i = 0; i < 25; ++i) {
    LevyEvent ev;
    ev.time = horizon * rng.uniform();
    ev.mask = 1u + (rng.raw() % 2);
    ev.losses = {0.0, 0.0};
    if (ev.mask & 1u) ev.losses[0] = s1.quantile(rng.uniform());
    if (ev.mask & 2u) ev.losses[1] = s2.quantile(rng.uniform());
    events.push_back(ev);
  }

  const ClaytonLevyCopula tiny{1e-6};
  const double ll = continuous_time_loglik_2d(events, lam1, lam2, s1, s2, tiny, horizon);

  double split = -horizon * (lam1 + lam2);
  for (const auto& ev : events) {
    if (ev.mask & 1u) split += std::log(lam1) + s1.log_pdf(ev.losses[0]);
    if (ev.mask & 2u) split += std::log(lam2) + s2.log_pdf(ev.losses[1]);
  }
  CHECK(ll == doctest::Approx(split).epsilon(1e-4));
}

TEST_CASE("sampler starvation names the subset") {
  // impossible pattern demand: independence with p ~ 1 makes lone jumps
  // astronomically rare, and the guard must trip rather than spin
  const CombBernoulliModel m = model2(0.999999, 0.999999, 0.0);
  IntensitySet is;
  is.horizon = 10.0;
  is.lambda_perp[1u] = 5.0;  // demand lone-first events
  try {
    simulate_levy(is, m, 3);
    CHECK(false);
  } catch (const SamplerStarved& e) {
    CHECK(std::string(e.what()).find("{1}") != std::string::npos);
  }
}
