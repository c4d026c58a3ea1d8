// Exercises the shared-library surface end to end: opaque handles, error
// codes, JSON documents.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "combfit.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  combfit_string_free(s);
  return out;
}

const char* kModelJson = R"({
  "marginals": [
    {"p": 0.5, "mu": 0.0, "sigma": 1.0},
    {"p": 0.4, "mu": 0.3, "sigma": 0.8}
  ],
  "correlation": [[1.0, 0.6], [0.6, 1.0]]
})";

}  // namespace

TEST_CASE("version and error plumbing") {
  CHECK(std::string(combfit_version()) == "0.1.0");
  combfit_series* s = nullptr;
  CHECK(combfit_series_load("/nonexistent/file.csv", 0, &s) == COMBFIT_ERR_PARSE);
  CHECK(std::string(combfit_last_error()).find("cannot open") != std::string::npos);
  CHECK(combfit_series_load(nullptr, 0, &s) == COMBFIT_ERR_INVALID);
}

TEST_CASE("model json round trip and accessors") {
  combfit_model* model = nullptr;
  REQUIRE(combfit_model_from_json(kModelJson, 1e-7, 1, &model) == COMBFIT_OK);
  int dim = 0;
  CHECK(combfit_model_dim(model, &dim) == COMBFIT_OK);
  CHECK(dim == 2);
  double rho = 0.0;
  CHECK(combfit_model_correlation(model, 0, 1, &rho) == COMBFIT_OK);
  CHECK(rho == doctest::Approx(0.6));
  double p = 0, mu = 0, sigma = 0;
  CHECK(combfit_model_marginal(model, 1, &p, &mu, &sigma) == COMBFIT_OK);
  CHECK(p == doctest::Approx(0.4));
  CHECK(sigma == doctest::Approx(0.8));

  char* out = nullptr;
  REQUIRE(combfit_model_to_json(model, &out) == COMBFIT_OK);
  const json doc = json::parse(take(out));
  CHECK(doc["marginals"].size() == 2);
  CHECK(doc["correlation"][1][0] == doctest::Approx(0.6));
  combfit_model_free(model);

  combfit_model* bad = nullptr;
  CHECK(combfit_model_from_json("{ not json", 1e-7, 1, &bad) == COMBFIT_ERR_PARSE);
  CHECK(combfit_model_from_json(R"({"marginals": []})", 1e-7, 1, &bad) == COMBFIT_ERR_PARSE);
  // invalid correlation -> data error
  CHECK(combfit_model_from_json(
            R"({"marginals":[{"p":0.5,"mu":0,"sigma":1},{"p":0.5,"mu":0,"sigma":1}],
                "correlation":[[1.0,1.4],[1.4,1.0]]})",
            1e-7, 1, &bad) == COMBFIT_ERR_DATA);
}

TEST_CASE("simulate -> stats -> fit pipeline over the C surface") {
  combfit_model* model = nullptr;
  REQUIRE(combfit_model_from_json(kModelJson, 1e-7, 1, &model) == COMBFIT_OK);

  combfit_series* sim = nullptr;
  REQUIRE(combfit_simulate(model, 1500, 99, &sim) == COMBFIT_OK);
  long n = 0;
  int d = 0;
  CHECK(combfit_series_shape(sim, &n, &d) == COMBFIT_OK);
  CHECK(n == 1500);
  CHECK(d == 2);

  char* stats = nullptr;
  REQUIRE(combfit_series_stats_json(sim, &stats) == COMBFIT_OK);
  const json sj = json::parse(take(stats));
  CHECK(sj["n_days"] == 1500);
  CHECK(sj["columns"].size() == 2);

  combfit_fit_options fo;
  combfit_fit_options_init(&fo);
  fo.seed = 3;
  fo.restarts = 2;
  combfit_model* fitted = nullptr;
  char* report = nullptr;
  REQUIRE(combfit_fit(sim, &fo, &fitted, &report) == COMBFIT_OK);
  const json fj = json::parse(take(report));
  CHECK(fj["converged"].get<bool>());
  double rho = 0.0;
  CHECK(combfit_model_correlation(fitted, 0, 1, &rho) == COMBFIT_OK);
  CHECK(std::fabs(rho - 0.6) < 0.08);

  // round trip through a CSV file
  const std::string path = "capi_roundtrip.csv";
  REQUIRE(combfit_series_to_csv(sim, path.c_str()) == COMBFIT_OK);
  combfit_series* loaded = nullptr;
  REQUIRE(combfit_series_load(path.c_str(), 0, &loaded) == COMBFIT_OK);
  long n2 = 0;
  combfit_series_shape(loaded, &n2, nullptr);
  CHECK(n2 == n);
  std::remove(path.c_str());

  combfit_series_free(loaded);
  combfit_series_free(sim);
  combfit_model_free(fitted);
  combfit_model_free(model);
}

TEST_CASE("bootstrap and spearman reports over the C surface") {
  combfit_model* model = nullptr;
  REQUIRE(combfit_model_from_json(kModelJson, 1e-7, 1, &model) == COMBFIT_OK);

  combfit_bootstrap_options bo;
  combfit_bootstrap_options_init(&bo);
  CHECK(bo.replicas == 1000);  // library default
  bo.replicas = 12;
  bo.seed = 5;
  bo.threads = 2;
  bo.fit.restarts = 1;
  char* boot = nullptr;
  REQUIRE(combfit_bootstrap_json(model, 250, &bo, &boot) == COMBFIT_OK);
  const json bj = json::parse(take(boot));
  CHECK(bj["n_replicas"] == 12);
  CHECK(bj["parameter_names"][0] == "rho_12");
  CHECK(bj["intervals"].size() == 1);
  CHECK(bj["intervals"][0][0].get<double>() <= bj["intervals"][0][1].get<double>());

  combfit_series* sim = nullptr;
  REQUIRE(combfit_simulate(model, 400, 42, &sim) == COMBFIT_OK);
  char* spear = nullptr;
  REQUIRE(combfit_spearman_json(sim, &spear) == COMBFIT_OK);
  const json sj = json::parse(take(spear));
  CHECK(sj["pairs"].size() == 1);
  CHECK(sj["pairs"][0]["rho_bounds"][0].get<double>() <=
        sj["pairs"][0]["rho_bounds"][1].get<double>());

  char* zm = nullptr;
  REQUIRE(combfit_zero_mixed_json(sim, 0, 0.05, &zm) == COMBFIT_OK);
  const json zj = json::parse(take(zm));
  CHECK(zj["subsets"].size() == 4);

  combfit_series_free(sim);
  combfit_model_free(model);
}

TEST_CASE("column selection over the C surface") {
  combfit_model* model = nullptr;
  REQUIRE(combfit_model_from_json(kModelJson, 1e-7, 1, &model) == COMBFIT_OK);
  combfit_series* sim = nullptr;
  REQUIRE(combfit_simulate(model, 100, 7, &sim) == COMBFIT_OK);
  combfit_series* sel = nullptr;
  REQUIRE(combfit_series_select(sim, "x2", &sel) == COMBFIT_OK);
  int d = 0;
  combfit_series_shape(sel, nullptr, &d);
  CHECK(d == 1);
  combfit_series* missing = nullptr;
  CHECK(combfit_series_select(sim, "zzz", &missing) == COMBFIT_ERR_DATA);
  combfit_series_free(sel);
  combfit_series_free(sim);
  combfit_model_free(model);
}
