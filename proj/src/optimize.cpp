#include "combfit/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace combfit {

NelderMeadResult nelder_mead_maximize(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> x0, double initial_step, const NelderMeadOptions& opts) {
  const int n = static_cast<int>(x0.size());
  constexpr double alpha = 1.0, gamma = 2.0, beta = 0.5, delta = 0.5;

  std::vector<std::vector<double>> x(n + 1, std::vector<double>(x0.begin(), x0.end()));
  for (int i = 0; i < n; ++i) x[i + 1][i] += initial_step;
  std::vector<double> fx(n + 1);
  for (int v = 0; v <= n; ++v) fx[v] = objective(x[v]);

  NelderMeadResult res;
  auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] > fx[b]; });
    std::vector<std::vector<double>> x2(n + 1);
    std::vector<double> f2(n + 1);
    for (int i = 0; i <= n; ++i) {
      x2[i] = x[idx[i]];
      f2[i] = fx[idx[i]];
    }
    x.swap(x2);
    fx.swap(f2);
  };

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    order();
    res.best_trace.push_back(fx[0]);

    double diam = 0.0;
    for (int v = 1; v <= n; ++v)
      for (int i = 0; i < n; ++i) diam = std::max(diam, std::fabs(x[v][i] - x[0][i]));
    if (diam < opts.tol_x && std::fabs(fx[0] - fx[n]) < opts.tol_f) {
      res.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (int v = 0; v < n; ++v)
      for (int i = 0; i < n; ++i) centroid[i] += x[v][i] / n;

    auto blend = [&](double coef, const std::vector<double>& towards) {
      std::vector<double> p(n);
      for (int i = 0; i < n; ++i) p[i] = centroid[i] + coef * (towards[i] - centroid[i]);
      return p;
    };

    std::vector<double> xr = blend(-alpha, x[n]);
    const double fr = objective(xr);
    if (fr > fx[0]) {
      std::vector<double> xe = blend(-gamma, x[n]);
      const double fe = objective(xe);
      if (fe > fr) {
        x[n] = std::move(xe);
        fx[n] = fe;
      } else {
        x[n] = std::move(xr);
        fx[n] = fr;
      }
      continue;
    }
    if (fr > fx[n - 1]) {
      x[n] = std::move(xr);
      fx[n] = fr;
      continue;
    }
    const bool outside = fr > fx[n];
    std::vector<double> xc = outside ? blend(-beta, x[n]) : blend(beta, x[n]);
    const double fc = objective(xc);
    if (fc > (outside ? fr : fx[n])) {
      x[n] = std::move(xc);
      fx[n] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (int v = 1; v <= n; ++v) {
      for (int i = 0; i < n; ++i) x[v][i] = x[0][i] + delta * (x[v][i] - x[0][i]);
      fx[v] = objective(x[v]);
    }
  }
  order();
  res.x = x[0];
  res.f = fx[0];
  res.iterations = iter;
  return res;
}

}  // namespace combfit
