#include "combfit/reports.hpp"

#include <chrono>
#include <cmath>

#include "combfit/errors.hpp"

namespace combfit {

using nlohmann::json;

std::string library_version() { return "0.1.0"; }

json model_to_json(const CombBernoulliModel& model) {
  model.validate();
  json marginals = json::array();
  for (const MixedMarginal& m : model.marginals) {
    const auto* logn = dynamic_cast<const LognormalSeverity*>(m.severity.get());
    if (!logn) throw DomainError("model_to_json: only lognormal severities serialize");
    marginals.push_back({{"p", m.p}, {"mu", logn->mu()}, {"sigma", logn->sigma()}});
  }
  json corr = json::array();
  for (int i = 0; i < model.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < model.dim(); ++j) row.push_back(model.copula.r(i, j));
    corr.push_back(row);
  }
  return {{"marginals", marginals}, {"correlation", corr}};
}

CombBernoulliModel model_from_json(const json& doc, double mvn_tol, std::uint64_t base_seed) {
  if (!doc.contains("marginals") || !doc.contains("correlation"))
    throw ParseError("model_from_json: document needs 'marginals' and 'correlation'");
  CombBernoulliModel model;
  for (const json& m : doc.at("marginals"))
    model.marginals.push_back(make_lognormal_marginal(
        m.at("p").get<double>(), m.at("mu").get<double>(), m.at("sigma").get<double>()));
  const int d = static_cast<int>(model.marginals.size());
  Matrix r(d, d);
  const json& corr = doc.at("correlation");
  if (static_cast<int>(corr.size()) != d)
    throw ParseError("model_from_json: correlation rows do not match marginal count");
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(corr[i].size()) != d)
      throw ParseError("model_from_json: correlation matrix is not square");
    for (int j = 0; j < d; ++j) r(i, j) = corr[i][j].get<double>();
  }
  model.copula = GaussianCopula{CorrelationMatrix(std::move(r)), mvn_tol, base_seed};
  model.validate();
  return model;
}

json summary_to_json(const DatasetSummary& s) {
  json cols = json::array();
  for (const ColumnSummary& c : s.columns)
    cols.push_back({{"label", c.label},
                    {"n_positive", c.n_positive},
                    {"share", c.share},
                    {"mean", c.mean},
                    {"min", c.min},
                    {"max", c.max}});
  json out{{"n_days", s.n_days},
           {"columns", cols},
           {"pair_co_jumps", s.pair_co_jumps},
           {"pair_no_jumps", s.pair_no_jumps},
           {"joint_co_jumps", s.joint_co_jumps},
           {"joint_no_jumps", s.joint_no_jumps}};
  if (!s.active_set_counts.empty()) out["active_set_counts"] = s.active_set_counts;
  return out;
}

json fit_report_to_json(const FitReport& report, const std::vector<std::string>& labels) {
  json marginals = json::array();
  for (size_t i = 0; i < report.marginals.size(); ++i) {
    const MarginalFit& mf = report.marginals[i];
    const auto* logn = dynamic_cast<const LognormalSeverity*>(mf.marginal.severity.get());
    json entry{{"p", mf.marginal.p},
               {"n_positive", mf.n_positive},
               {"p_stderr", mf.p_stderr},
               {"mu_stderr", mf.mu_stderr},
               {"sigma_stderr", mf.sigma_stderr}};
    if (logn) {
      entry["mu"] = logn->mu();
      entry["sigma"] = logn->sigma();
    }
    if (i < labels.size()) entry["label"] = labels[i];
    marginals.push_back(entry);
  }
  const int d = report.correlation.dim();
  json corr = json::array();
  for (int i = 0; i < d; ++i) {
    json row = json::array();
    for (int j = 0; j < d; ++j) row.push_back(report.correlation(i, j));
    corr.push_back(row);
  }
  json out{{"marginals", marginals},
           {"correlation", corr},
           {"loglik", report.loglik},
           {"iterations", report.iterations},
           {"converged", report.converged},
           {"clamp_count", report.clamp_count}};
  if (!report.correlation_ci.empty()) {
    json cis = json::array();
    for (const Interval& ci : report.correlation_ci) cis.push_back({ci.lo, ci.hi});
    out["correlation_ci"] = cis;
  }
  return out;
}

json bootstrap_to_json(const BootstrapResult& result) {
  auto intervals_json = [](const std::vector<Interval>& v) {
    json arr = json::array();
    for (const Interval& i : v) arr.push_back({i.lo, i.hi});
    return arr;
  };
  return {{"parameter_names", result.parameter_names},
          {"n_replicas", result.replicas.size()},
          {"n_failed", result.n_failed},
          {"alpha", result.alpha},
          {"bonferroni", result.bonferroni},
          {"intervals", intervals_json(result.intervals)},
          {"intervals_plain", intervals_json(result.intervals_plain)},
          {"intervals_bonferroni", intervals_json(result.intervals_bonferroni)}};
}

json zero_mixed_to_json(const ZeroMixedReport& report, const std::vector<std::string>& labels) {
  json subsets = json::array();
  for (const ZeroMixedSubset& s : report.subsets) {
    json names = json::array();
    for (int idx : s.indices)
      names.push_back(idx < static_cast<int>(labels.size()) ? labels[idx]
                                                            : "x" + std::to_string(idx + 1));
    json entry{{"indices", s.indices},
               {"labels", names},
               {"count", s.count},
               {"p_hat", s.p_hat},
               {"p_ci", {s.p_ci.lo, s.p_ci.hi}},
               {"undetermined", s.undetermined},
               {"wide", s.wide}};
    if (!s.correlation.empty()) {
      entry["correlation"] = s.correlation;
      json cis = json::array();
      for (const Interval& ci : s.correlation_ci) cis.push_back({ci.lo, ci.hi});
      entry["correlation_ci"] = cis;
    }
    subsets.push_back(entry);
  }
  json severities = json::array();
  for (size_t i = 0; i < report.severities.size(); ++i) {
    const auto* logn =
        dynamic_cast<const LognormalSeverity*>(report.severities[i].marginal.severity.get());
    severities.push_back({{"label", i < labels.size() ? labels[i] : "x" + std::to_string(i + 1)},
                          {"mu", logn ? logn->mu() : 0.0},
                          {"sigma", logn ? logn->sigma() : 0.0}});
  }
  return {{"n_rows", report.n_rows},
          {"dim", report.dim},
          {"parameter_count", report.parameter_count},
          {"severities", severities},
          {"subsets", subsets}};
}

json spearman_report_json(const ClaimSeries& series) {
  const int d = series.n_cols;
  json pairs = json::array();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const std::vector<double> xi = series.column(i);
      const std::vector<double> xj = series.column(j);
      const SpearmanBounds b = spearman_bounds(xi, xj);
      pairs.push_back(
          {{"i", i},
           {"j", j},
           {"labels", {series.labels[i], series.labels[j]}},
           {"rho_bounds", {b.lo, b.hi}},
           {"r_bounds", {spearman_transform(b.lo), spearman_transform(b.hi)}},
           {"degenerate", b.degenerate}});
    }
  return {{"n_rows", series.n_rows}, {"pairs", pairs}};
}

json provenance_json(const std::string& command, std::uint64_t seed, double mvn_tol) {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
  return {{"command", command},
          {"seed", seed},
          {"mvn_tol", mvn_tol},
          {"library_version", library_version()},
          {"timestamp_unix", secs.count()}};
}

}  // namespace combfit
