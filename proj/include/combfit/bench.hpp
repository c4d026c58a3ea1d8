#pragma once

// Simulation-time benchmark: threshold-transform simulation against the
// 2^d-1-process jump simulator across dimensions, with a linear-vs-
// exponential classification of the measured growth.

#include <cstdint>
#include <string>
#include <vector>

namespace combfit {

struct BenchOptions {
  std::vector<int> dims{2, 3, 20, 100};
  long n_rows = 1000;         // rows per timed run of the threshold simulator
  int repetitions = 20;       // timed repetitions; one warm-up run is discarded
  std::uint64_t seed = 0xbe9c4ull;
  double student_t_nu = 4.0;  // copula driving the timed draws
  double mvn_tol = 1e-4;      // intensity computation tolerance for the jump simulator
  int levy_max_dim = 12;      // beyond this the jump simulator is reported infeasible
  double levy_horizon = 50.0; // expected event budget per run, dt = 1
};

struct BenchRow {
  int dim = 0;
  double comb_seconds = 0.0;
  double levy_seconds = 0.0;
  bool levy_feasible = false;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double comb_linear_r2 = 0.0;   // linear fit of comb time against d
  double comb_linear_sse = 0.0;
  double comb_exp_sse = 0.0;     // exponential fit via log-linear regression
  std::string comb_classification;  // "linear" when the linear model wins
  std::vector<double> levy_step_ratios;  // time ratios between consecutive feasible dims
};

BenchReport run_bench(const BenchOptions& opts);
std::string bench_to_csv(const BenchReport& report);

}  // namespace combfit
