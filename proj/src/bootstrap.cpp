#include "combfit/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "combfit/errors.hpp"
#include "combfit/rng.hpp"

namespace combfit {

double empirical_quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) throw DomainError("empirical_quantile: empty sample");
  const long b = static_cast<long>(sorted.size());
  long rank = static_cast<long>(std::ceil(q * b));
  rank = std::clamp(rank, 1L, b);
  return sorted[rank - 1];
}

BootstrapResult parametric_bootstrap(const CombBernoulliModel& model, long n_rows,
                                     const BootstrapOptions& opts) {
  model.validate();
  if (opts.replicas < 1) throw DomainError("parametric_bootstrap: need at least one replica");
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0))
    throw DomainError("parametric_bootstrap: alpha outside (0,1)");
  const int d = model.dim();
  const int m = d * (d - 1) / 2;

  BootstrapResult result;
  result.alpha = opts.alpha;
  result.bonferroni = opts.bonferroni;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      result.parameter_names.push_back("rho_" + std::to_string(i + 1) + std::to_string(j + 1));

  // One slot per replica, filled independently; assembly below keeps replica
  // order, so thread count cannot change the result.
  std::vector<std::vector<double>> slots(opts.replicas);
  std::vector<char> failed(opts.replicas, 0);

  auto run_replica = [&](int b) {
    const std::uint64_t replica_seed = derive_seed(opts.seed, static_cast<std::uint64_t>(b) + 1);
    try {
      const ClaimSeries replica = simulate(model, n_rows, replica_seed);
      FitOptions fo = opts.fit;
      fo.seed = derive_seed(replica_seed, 0xf17ull);
      const FitReport fit = fit_ifm(replica, fo);
      if (!fit.converged) {
        failed[b] = 1;
        return;
      }
      slots[b] = fit.correlation.upper_entries();
    } catch (const Error&) {
      failed[b] = 1;
    }
  };

  const int n_threads = std::max(1, opts.threads);
  if (n_threads == 1) {
    for (int b = 0; b < opts.replicas; ++b) run_replica(b);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const int b = next.fetch_add(1);
          if (b >= opts.replicas) return;
          run_replica(b);
        }
      });
    for (auto& th : pool) th.join();
  }

  for (int b = 0; b < opts.replicas; ++b) {
    if (failed[b]) {
      ++result.n_failed;
      continue;
    }
    result.replicas.push_back(std::move(slots[b]));
  }
  if (result.n_failed > 0 &&
      result.n_failed > static_cast<int>(0.05 * opts.replicas))
    throw BootstrapUnstable("parametric_bootstrap: more than 5% of replicas failed to refit");
  if (result.replicas.empty())
    throw BootstrapUnstable("parametric_bootstrap: no replica produced an estimate");

  const double m_eff = static_cast<double>(std::max(1, m));
  for (int p = 0; p < m; ++p) {
    std::vector<double> column;
    column.reserve(result.replicas.size());
    for (const auto& row : result.replicas) column.push_back(row[p]);
    std::sort(column.begin(), column.end());
    const double a_plain = opts.alpha / 2.0;
    const double a_bonf = opts.alpha / (2.0 * m_eff);
    result.intervals_plain.push_back(
        {empirical_quantile(column, a_plain), empirical_quantile(column, 1.0 - a_plain)});
    result.intervals_bonferroni.push_back(
        {empirical_quantile(column, a_bonf), empirical_quantile(column, 1.0 - a_bonf)});
  }
  result.intervals = opts.bonferroni ? result.intervals_bonferroni : result.intervals_plain;
  return result;
}

}  // namespace combfit
