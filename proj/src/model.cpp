#include "combfit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "combfit/errors.hpp"
#include "combfit/normal.hpp"
#include "combfit/rng.hpp"

namespace combfit {

namespace {

constexpr double kUClampLo = 1e-12;
constexpr double kUClampHi = 1.0 - 1e-12;
constexpr double kProbFloor = 1e-300;

double clamp_u(double u, long* clamp_count) {
  if (u < kUClampLo) {
    ++*clamp_count;
    return kUClampLo;
  }
  if (u > kUClampHi) {
    ++*clamp_count;
    return kUClampHi;
  }
  return u;
}

}  // namespace

std::vector<double> ClaimSeries::column(int c) const {
  std::vector<double> out(n_rows);
  for (long r = 0; r < n_rows; ++r) out[r] = at(r, c);
  return out;
}

void ClaimSeries::validate() const {
  if (n_rows < 1 || n_cols < 1) throw ShapeError("ClaimSeries: empty series");
  if (values.size() != static_cast<size_t>(n_rows) * n_cols)
    throw ShapeError("ClaimSeries: value buffer does not match dimensions");
  if (!labels.empty()) {
    if (static_cast<int>(labels.size()) != n_cols)
      throw ShapeError("ClaimSeries: label count does not match columns");
    for (size_t i = 0; i < labels.size(); ++i)
      for (size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j]) throw DomainError("ClaimSeries: duplicate column label");
  }
  for (double v : values)
    if (!(v >= 0.0)) throw DomainError("ClaimSeries: negative or NaN claim value");
}

ActiveSet active_set(std::span<const double> x) {
  ActiveSet s;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0)) throw DomainError("active_set: negative or NaN claim value");
    if (x[i] > 0.0) s.indices.push_back(static_cast<int>(i));
  }
  return s;
}

void CombBernoulliModel::validate() const {
  if (marginals.empty()) throw ShapeError("CombBernoulliModel: no marginals");
  if (copula.dim() != dim())
    throw ShapeError("CombBernoulliModel: copula dimension does not match marginal count");
  for (const auto& m : marginals) {
    if (!(m.p > 0.0 && m.p <= 1.0)) throw DomainError("CombBernoulliModel: p outside (0,1]");
    if (!m.severity) throw DomainError("CombBernoulliModel: missing severity distribution");
  }
}

// ---------------------------------------------------------------------------
// LikelihoodEvaluator
// ---------------------------------------------------------------------------

LikelihoodEvaluator::LikelihoodEvaluator(std::span<const MixedMarginal> marginals,
                                         const ClaimSeries& series, double mvn_tol,
                                         std::uint64_t base_seed)
    : dim_(static_cast<int>(marginals.size())),
      n_rows_(series.n_rows),
      mvn_tol_(mvn_tol),
      base_seed_(base_seed) {
  if (series.n_cols != dim_)
    throw ShapeError("log_likelihood: series columns do not match model dimension");
  series.validate();

  std::vector<double> z_thresh(dim_);
  for (int i = 0; i < dim_; ++i)
    z_thresh[i] = std_normal_quantile(clamp_u(1.0 - marginals[i].p, &clamp_count_));

  std::map<std::vector<int>, size_t> index;
  for (long r = 0; r < series.n_rows; ++r) {
    const ActiveSet s = active_set(series.row(r));
    auto [it, inserted] = index.try_emplace(s.indices, groups_.size());
    if (inserted) {
      Group g;
      g.active = s.indices;
      for (int j = 0; j < dim_; ++j)
        if (!std::binary_search(s.indices.begin(), s.indices.end(), j))
          g.z_thresh.push_back(z_thresh[j]);
      groups_.push_back(std::move(g));
    }
    Group& g = groups_[it->second];
    g.rows.push_back(r);
    for (int i : s.indices) {
      const double x = series.at(r, i);
      const MixedMarginal& m = marginals[i];
      const double u = clamp_u((1.0 - m.p) + m.p * m.severity->cdf(x), &clamp_count_);
      g.z_active.push_back(std_normal_quantile(u));
      g.marginal_term += std::log(m.p) + m.severity->log_pdf(x);
    }
  }
}

double LikelihoodEvaluator::eval(const CorrelationMatrix& r, LikelihoodDiagnostics* diag) const {
  if (r.dim() != dim_) throw ShapeError("log_likelihood: correlation dimension mismatch");
  if (diag) {
    diag->clamp_count = clamp_count_;
    diag->underflow_count = 0;
    diag->per_active_set.clear();
  }
  double total = 0.0;
  for (const Group& g : groups_) {
    const int s = static_cast<int>(g.active.size());
    const int t = dim_ - s;
    double group_sum = g.marginal_term;
    long underflow = 0;

    if (s == 0) {
      // All-zero observations share one copula value: C(1-p; R).
      const double c = mvn_cdf(g.z_thresh, r, mvn_tol_, derive_seed(base_seed_, kEmptySetSeedStream));
      if (c < kProbFloor) ++underflow;
      group_sum += static_cast<double>(g.rows.size()) * std::log(std::max(c, kProbFloor));
    } else {
      const PartitionedCorrelation part = partition(r, g.active);
      // Cached Cholesky of R_SS for the density-ratio factor.
      Matrix l_ss;
      double logdet_ss = 0.0;
      if (s > 1) {
        l_ss = cholesky_lower(part.r_ss);
        for (int i = 0; i < s; ++i) logdet_ss += std::log(l_ss(i, i));
      }
      // Standardized Schur complement for the conditional cdf factor.
      std::vector<double> cond_sd(t);
      double cond_rho = 0.0;
      CorrelationMatrix cond_corr = CorrelationMatrix::identity(std::max(t, 1));
      if (t > 0) {
        Matrix corr(t, t);
        for (int i = 0; i < t; ++i) cond_sd[i] = std::sqrt(part.schur(i, i));
        for (int i = 0; i < t; ++i) {
          corr(i, i) = 1.0;
          for (int j = 0; j < i; ++j) {
            double rho = part.schur(i, j) / (cond_sd[i] * cond_sd[j]);
            rho = std::clamp(rho, -(1.0 - 1e-14), 1.0 - 1e-14);
            corr(i, j) = corr(j, i) = rho;
          }
        }
        if (t == 2) cond_rho = corr(1, 0);
        if (t >= 3) cond_corr = CorrelationMatrix(std::move(corr));
      }

      std::vector<double> zs(s), w(t), y(s);
      for (size_t k = 0; k < g.rows.size(); ++k) {
        for (int i = 0; i < s; ++i) zs[i] = g.z_active[k * s + i];
        double contrib = 0.0;
        if (s > 1) {
          // ln phi_s(z; R_SS) - ln phi_s(z; I) = -(z' R^{-1} z - z'z)/2 - ln|L|
          for (int i = 0; i < s; ++i) {
            double acc = zs[i];
            for (int k2 = 0; k2 < i; ++k2) acc -= l_ss(i, k2) * y[k2];
            y[i] = acc / l_ss(i, i);
          }
          double quad = 0.0;
          for (int i = 0; i < s; ++i) quad += y[i] * y[i] - zs[i] * zs[i];
          contrib += -0.5 * quad - logdet_ss;
        }
        if (t > 0) {
          for (int i = 0; i < t; ++i) {
            double acc = g.z_thresh[i];
            for (int k2 = 0; k2 < s; ++k2) acc -= part.shift(i, k2) * zs[k2];
            w[i] = acc / cond_sd[i];
          }
          double cond;
          if (t == 1)
            cond = std_normal_cdf(w[0]);
          else if (t == 2)
            cond = bvn_cdf(w[0], w[1], cond_rho);
          else
            cond = mvn_cdf(w, cond_corr, mvn_tol_, derive_seed(base_seed_, g.rows[k]));
          if (cond < kProbFloor) ++underflow;
          contrib += std::log(std::max(cond, kProbFloor));
        }
        if (!std::isfinite(contrib))
          throw LikelihoodUnderflow("log_likelihood: non-finite contribution", g.rows[k]);
        group_sum += contrib;
      }
    }
    if (!std::isfinite(group_sum))
      throw LikelihoodUnderflow("log_likelihood: non-finite contribution", g.rows.front());
    total += group_sum;
    if (diag) {
      diag->underflow_count += underflow;
      diag->per_active_set[g.active] = {static_cast<long>(g.rows.size()), group_sum};
    }
  }
  return total;
}

double log_likelihood(const CombBernoulliModel& model, const ClaimSeries& series,
                      LikelihoodDiagnostics* diag) {
  model.validate();
  LikelihoodEvaluator ev(model.marginals, series, model.copula.mvn_tol, model.copula.base_seed);
  return ev.eval(model.copula.r, diag);
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

namespace {

double z_of_marginal(const MixedMarginal& m, double x, long* clamps) {
  return std_normal_quantile(clamp_u(m.cdf(x), clamps));
}

}  // namespace

double loglik_closed_form_2d(const CombBernoulliModel& model, double x1, double x2) {
  if (model.dim() != 2) throw ShapeError("loglik_closed_form_2d: model dimension must be 2");
  if (x1 < 0.0 || x2 < 0.0) throw DomainError("loglik_closed_form_2d: negative claim");
  const double rho = model.copula.r(0, 1);
  const MixedMarginal& m1 = model.marginals[0];
  const MixedMarginal& m2 = model.marginals[1];
  long clamps = 0;
  const double a1 = std_normal_quantile(clamp_u(1.0 - m1.p, &clamps));
  const double a2 = std_normal_quantile(clamp_u(1.0 - m2.p, &clamps));
  const double om = 1.0 - rho * rho;

  if (x1 == 0.0 && x2 == 0.0) return std::log(std::max(bvn_cdf(a1, a2, rho), kProbFloor));
  if (x1 > 0.0 && x2 == 0.0) {
    const double z1 = z_of_marginal(m1, x1, &clamps);
    return std::log(std::max(std_normal_cdf((a2 - rho * z1) / std::sqrt(om)), kProbFloor)) +
           std::log(m1.p) + m1.severity->log_pdf(x1);
  }
  if (x1 == 0.0) {
    const double z2 = z_of_marginal(m2, x2, &clamps);
    return std::log(std::max(std_normal_cdf((a1 - rho * z2) / std::sqrt(om)), kProbFloor)) +
           std::log(m2.p) + m2.severity->log_pdf(x2);
  }
  const double z1 = z_of_marginal(m1, x1, &clamps);
  const double z2 = z_of_marginal(m2, x2, &clamps);
  const double log_density = -0.5 * (std::log(om) + (rho * rho * (z1 * z1 + z2 * z2) -
                                                     2.0 * rho * z1 * z2) / om);
  return log_density + std::log(m1.p) + m1.severity->log_pdf(x1) + std::log(m2.p) +
         m2.severity->log_pdf(x2);
}

double loglik_closed_form_3d(const CombBernoulliModel& model, const std::array<double, 3>& x) {
  if (model.dim() != 3) throw ShapeError("loglik_closed_form_3d: model dimension must be 3");
  for (double xi : x)
    if (xi < 0.0) throw DomainError("loglik_closed_form_3d: negative claim");
  const double r12 = model.copula.r(0, 1);
  const double r13 = model.copula.r(0, 2);
  const double r23 = model.copula.r(1, 2);
  long clamps = 0;
  std::array<double, 3> a, z{};
  std::array<bool, 3> pos{};
  double marginal = 0.0;
  for (int i = 0; i < 3; ++i) {
    const MixedMarginal& m = model.marginals[i];
    a[i] = std_normal_quantile(clamp_u(1.0 - m.p, &clamps));
    pos[i] = x[i] > 0.0;
    if (pos[i]) {
      z[i] = z_of_marginal(m, x[i], &clamps);
      marginal += std::log(m.p) + m.severity->log_pdf(x[i]);
    }
  }
  const int npos = pos[0] + pos[1] + pos[2];

  // Bivariate normal copula log-density for coordinates (i,j).
  auto log_c2 = [&](double zi, double zj, double rij) {
    const double om = 1.0 - rij * rij;
    return -0.5 * (std::log(om) +
                   (rij * rij * (zi * zi + zj * zj) - 2.0 * rij * zi * zj) / om);
  };
  // ln Phi of the threshold of k conditioned on the two active coordinates.
  auto log_cond1 = [&](int k, int i, int j, double rij) {
    const double rki = model.copula.r(k, i);
    const double rkj = model.copula.r(k, j);
    const double det = 1.0 - rij * rij;
    const double ci = (rki - rkj * rij) / det;  // row-vector R_{k,ij} R_{ij,ij}^{-1}
    const double cj = (rkj - rki * rij) / det;
    const double num = a[k] - ci * z[i] - cj * z[j];
    const double var = 1.0 - (ci * rki + cj * rkj);
    return std::log(std::max(std_normal_cdf(num / std::sqrt(var)), kProbFloor));
  };

  if (npos == 0) {
    const double c =
        mvn_cdf(std::span<const double>(a.data(), 3), model.copula.r, model.copula.mvn_tol,
                derive_seed(model.copula.base_seed, kEmptySetSeedStream));
    return std::log(std::max(c, kProbFloor));
  }
  if (npos == 1) {
    const int i = pos[0] ? 0 : (pos[1] ? 1 : 2);
    const int j = (i == 0) ? 1 : 0;
    const int k = (i == 2) ? 1 : 2;
    const double rij = model.copula.r(i, j);
    const double rik = model.copula.r(i, k);
    const double rjk = model.copula.r(j, k);
    // Phi_2 of the conditional law of (z_j, z_k) given z_i.
    const double h = (a[j] - rij * z[i]) / std::sqrt(1.0 - rij * rij);
    const double g = (a[k] - rik * z[i]) / std::sqrt(1.0 - rik * rik);
    const double rho_cond =
        (rjk - rij * rik) / std::sqrt((1.0 - rij * rij) * (1.0 - rik * rik));
    return std::log(std::max(bvn_cdf(h, g, rho_cond), kProbFloor)) + marginal;
  }
  if (npos == 2) {
    int i, j, k;
    if (!pos[2]) {
      i = 0; j = 1; k = 2;
    } else if (!pos[1]) {
      i = 0; j = 2; k = 1;
    } else {
      i = 1; j = 2; k = 0;
    }
    const double rij = model.copula.r(i, j);
    return log_c2(z[i], z[j], rij) + log_cond1(k, i, j, rij) + marginal;
  }
  // all three positive: trivariate Gaussian copula log-density
  std::array<double, 3> zz{z[0], z[1], z[2]};
  double log_num = mvn_log_pdf(std::span<const double>(zz.data(), 3), model.copula.r);
  for (double zi : zz) log_num -= std_normal_log_pdf(zi);
  return log_num + marginal;
}

// ---------------------------------------------------------------------------
// Active-set probabilities and simulation
// ---------------------------------------------------------------------------

double active_set_probability(const CombBernoulliModel& model, std::span<const int> i_set) {
  model.validate();
  const int d = model.dim();
  if (d > 20)
    throw DomainError("active_set_probability: superset enumeration is 2^(d-|I|); d > 20 refused");
  std::uint32_t base_mask = 0;
  for (int idx : i_set) {
    if (idx < 0 || idx >= d) throw ShapeError("active_set_probability: index out of range");
    base_mask |= (1u << idx);
  }
  std::vector<int> free_idx;
  for (int i = 0; i < d; ++i)
    if (!(base_mask & (1u << i))) free_idx.push_back(i);

  const int nf = static_cast<int>(free_idx.size());
  double prob = 0.0;
  std::vector<int> j_set;
  std::vector<double> p_vals;
  for (std::uint32_t sub = 0; sub < (1u << nf); ++sub) {
    std::uint32_t mask = base_mask;
    for (int b = 0; b < nf; ++b)
      if (sub & (1u << b)) mask |= (1u << free_idx[b]);
    j_set.clear();
    p_vals.clear();
    for (int i = 0; i < d; ++i)
      if (mask & (1u << i)) {
        j_set.push_back(i);
        p_vals.push_back(model.marginals[i].p);
      }
    const double surv =
        j_set.empty() ? 1.0 : survival_restricted(model.copula, j_set, p_vals, mask);
    const int extra = static_cast<int>(j_set.size()) - static_cast<int>(i_set.size());
    prob += (extra % 2 == 0 ? 1.0 : -1.0) * surv;
  }
  return prob;
}

ClaimSeries simulate(const CombBernoulliModel& model, long n, std::uint64_t seed) {
  model.validate();
  if (n < 1) throw DomainError("simulate: n must be positive");
  const int d = model.dim();
  const Matrix& l = model.copula.r.chol();

  std::vector<double> thresh(d);
  for (int i = 0; i < d; ++i) {
    const double p = model.marginals[i].p;
    thresh[i] = p < 1.0 ? std_normal_quantile(1.0 - p) : -std::numeric_limits<double>::infinity();
  }

  ClaimSeries out;
  out.n_rows = n;
  out.n_cols = d;
  out.values.resize(static_cast<size_t>(n) * d);
  out.labels.reserve(d);
  for (int i = 0; i < d; ++i) out.labels.push_back("x" + std::to_string(i + 1));

  Rng rng(derive_seed(seed, 0x73696dull));
  std::vector<double> eps(d), y(d);
  for (long row = 0; row < n; ++row) {
    for (int i = 0; i < d; ++i) eps[i] = rng.normal();
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int k = 0; k <= i; ++k) acc += l(i, k) * eps[k];
      y[i] = acc;
    }
    for (int i = 0; i < d; ++i) {
      if (y[i] <= thresh[i]) {
        out.at(row, i) = 0.0;
      } else {
        const double p = model.marginals[i].p;
        double q = (std_normal_cdf(y[i]) - (1.0 - p)) / p;
        q = std::clamp(q, 1e-16, 1.0 - 1e-16);
        out.at(row, i) = model.marginals[i].severity->quantile(q);
      }
    }
  }
  return out;
}

}  // namespace combfit
