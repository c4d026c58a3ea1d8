#pragma once

// Derivative-free simplex maximizer (Nelder & Mead 1965, standard
// coefficients). The objective may return very large negative values to
// encode domain barriers.

#include <functional>
#include <span>
#include <vector>

namespace combfit {

struct NelderMeadOptions {
  double tol_x = 1e-4;   // simplex diameter
  double tol_f = 1e-8;   // spread of objective values
  int max_iter = 400;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> best_trace;  // best objective value after each iteration
};

NelderMeadResult nelder_mead_maximize(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> x0, double initial_step, const NelderMeadOptions& opts = {});

}  // namespace combfit
