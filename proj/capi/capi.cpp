#include "combfit.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "combfit/bench.hpp"
#include "combfit/bootstrap.hpp"
#include "combfit/data_io.hpp"
#include "combfit/errors.hpp"
#include "combfit/estimation.hpp"
#include "combfit/model.hpp"
#include "combfit/reports.hpp"

struct combfit_series {
  combfit::ClaimSeries series;
};

struct combfit_model {
  combfit::CombBernoulliModel model;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

combfit_status fail(combfit_status code, const char* message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
combfit_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const combfit::ParseError& e) {
    return fail(COMBFIT_ERR_PARSE, e.what());
  } catch (const combfit::BootstrapUnstable& e) {
    return fail(COMBFIT_ERR_NO_CONVERGENCE, e.what());
  } catch (const combfit::FactorizationError& e) {
    return fail(COMBFIT_ERR_NUMERIC, e.what());
  } catch (const combfit::LikelihoodUnderflow& e) {
    return fail(COMBFIT_ERR_NUMERIC, e.what());
  } catch (const combfit::SamplerStarved& e) {
    return fail(COMBFIT_ERR_NUMERIC, e.what());
  } catch (const combfit::ParameterError& e) {
    return fail(COMBFIT_ERR_NUMERIC, e.what());
  } catch (const combfit::InsufficientPositives& e) {
    return fail(COMBFIT_ERR_DATA, e.what());
  } catch (const combfit::DomainError& e) {
    return fail(COMBFIT_ERR_DATA, e.what());
  } catch (const combfit::ShapeError& e) {
    return fail(COMBFIT_ERR_DATA, e.what());
  } catch (const combfit::Error& e) {
    return fail(COMBFIT_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(COMBFIT_ERR_INVALID, e.what());
  }
}

combfit::FitOptions to_fit_options(const combfit_fit_options* opts) {
  combfit::FitOptions out;
  if (opts) {
    out.tol = opts->tol;
    out.max_iter = opts->max_iter;
    out.restarts = opts->restarts;
    out.seed = opts->seed;
    out.mvn_tol = opts->mvn_tol;
  }
  return out;
}

}  // namespace

extern "C" {

const char* combfit_version(void) {
  static const std::string v = combfit::library_version();
  return v.c_str();
}

const char* combfit_last_error(void) { return g_last_error.c_str(); }

void combfit_string_free(char* s) { std::free(s); }

void combfit_fit_options_init(combfit_fit_options* opts) {
  if (!opts) return;
  const combfit::FitOptions d;
  opts->tol = d.tol;
  opts->max_iter = d.max_iter;
  opts->restarts = d.restarts;
  opts->seed = d.seed;
  opts->mvn_tol = d.mvn_tol;
}

void combfit_bootstrap_options_init(combfit_bootstrap_options* opts) {
  if (!opts) return;
  const combfit::BootstrapOptions d;
  opts->replicas = d.replicas;
  opts->alpha = d.alpha;
  opts->bonferroni = d.bonferroni ? 1 : 0;
  opts->seed = d.seed;
  opts->threads = d.threads;
  combfit_fit_options_init(&opts->fit);
}

combfit_status combfit_series_load(const char* path, int unit_is_dkk, combfit_series** out) {
  if (!path || !out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    combfit::LoadOptions lo;
    lo.unit = unit_is_dkk ? combfit::ClaimUnit::kDkk : combfit::ClaimUnit::kMillions;
    *out = new combfit_series{combfit::load_claims(path, lo)};
    return COMBFIT_OK;
  });
}

combfit_status combfit_series_from_values(long n_rows, int n_cols, const double* row_major,
                                          const char* const* labels, combfit_series** out) {
  if (!row_major || !out || n_rows < 1 || n_cols < 1)
    return fail(COMBFIT_ERR_INVALID, "null argument or empty shape");
  return guarded([&] {
    combfit::ClaimSeries s;
    s.n_rows = n_rows;
    s.n_cols = n_cols;
    s.values.assign(row_major, row_major + static_cast<size_t>(n_rows) * n_cols);
    for (int c = 0; c < n_cols; ++c)
      s.labels.push_back(labels && labels[c] ? labels[c] : "x" + std::to_string(c + 1));
    s.validate();
    *out = new combfit_series{std::move(s)};
    return COMBFIT_OK;
  });
}

void combfit_series_free(combfit_series* series) { delete series; }

combfit_status combfit_series_shape(const combfit_series* series, long* n_rows, int* n_cols) {
  if (!series) return fail(COMBFIT_ERR_INVALID, "null series");
  if (n_rows) *n_rows = series->series.n_rows;
  if (n_cols) *n_cols = series->series.n_cols;
  return COMBFIT_OK;
}

combfit_status combfit_series_select(const combfit_series* series, const char* labels,
                                     combfit_series** out) {
  if (!series || !labels || !out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    std::vector<std::string> wanted;
    std::stringstream ss(labels);
    std::string item;
    while (std::getline(ss, item, ',')) wanted.push_back(item);
    *out = new combfit_series{combfit::select_columns(series->series, wanted)};
    return COMBFIT_OK;
  });
}

combfit_status combfit_series_to_csv(const combfit_series* series, const char* path) {
  if (!series || !path) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    combfit::write_claims_csv(series->series, path);
    return COMBFIT_OK;
  });
}

combfit_status combfit_series_stats_json(const combfit_series* series, char** json_out) {
  if (!series || !json_out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    *json_out = dup_string(combfit::summary_to_json(combfit::summarize(series->series)).dump(2));
    return COMBFIT_OK;
  });
}

combfit_status combfit_model_from_json(const char* json_text, double mvn_tol, uint64_t seed,
                                       combfit_model** out) {
  if (!json_text || !out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      throw combfit::ParseError(std::string("model json: ") + e.what());
    }
    *out = new combfit_model{combfit::model_from_json(doc, mvn_tol, seed)};
    return COMBFIT_OK;
  });
}

combfit_status combfit_model_to_json(const combfit_model* model, char** json_out) {
  if (!model || !json_out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    *json_out = dup_string(combfit::model_to_json(model->model).dump(2));
    return COMBFIT_OK;
  });
}

void combfit_model_free(combfit_model* model) { delete model; }

combfit_status combfit_model_dim(const combfit_model* model, int* dim) {
  if (!model || !dim) return fail(COMBFIT_ERR_INVALID, "null argument");
  *dim = model->model.dim();
  return COMBFIT_OK;
}

combfit_status combfit_model_correlation(const combfit_model* model, int i, int j, double* rho) {
  if (!model || !rho) return fail(COMBFIT_ERR_INVALID, "null argument");
  if (i < 0 || j < 0 || i >= model->model.dim() || j >= model->model.dim())
    return fail(COMBFIT_ERR_INVALID, "correlation index out of range");
  *rho = model->model.copula.r(i, j);
  return COMBFIT_OK;
}

combfit_status combfit_model_marginal(const combfit_model* model, int i, double* p, double* mu,
                                      double* sigma) {
  if (!model) return fail(COMBFIT_ERR_INVALID, "null model");
  if (i < 0 || i >= model->model.dim()) return fail(COMBFIT_ERR_INVALID, "index out of range");
  const combfit::MixedMarginal& m = model->model.marginals[i];
  const auto* logn = dynamic_cast<const combfit::LognormalSeverity*>(m.severity.get());
  if (!logn) return fail(COMBFIT_ERR_INVALID, "marginal is not lognormal");
  if (p) *p = m.p;
  if (mu) *mu = logn->mu();
  if (sigma) *sigma = logn->sigma();
  return COMBFIT_OK;
}

combfit_status combfit_model_loglik(const combfit_model* model, const combfit_series* series,
                                    double* loglik) {
  if (!model || !series || !loglik) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    *loglik = combfit::log_likelihood(model->model, series->series);
    return COMBFIT_OK;
  });
}

combfit_status combfit_fit(const combfit_series* series, const combfit_fit_options* opts,
                           combfit_model** model_out, char** report_json_out) {
  if (!series) return fail(COMBFIT_ERR_INVALID, "null series");
  return guarded([&] {
    const combfit::FitOptions fo = to_fit_options(opts);
    const combfit::FitReport report = combfit::fit_ifm(series->series, fo);
    if (report_json_out)
      *report_json_out =
          dup_string(combfit::fit_report_to_json(report, series->series.labels).dump(2));
    if (model_out)
      *model_out = new combfit_model{report.to_model(fo.mvn_tol, fo.seed)};
    if (!report.converged) {
      g_last_error = "fit_ifm: optimizer did not converge (partial report returned)";
      return COMBFIT_ERR_NO_CONVERGENCE;
    }
    return COMBFIT_OK;
  });
}

combfit_status combfit_simulate(const combfit_model* model, long n_rows, uint64_t seed,
                                combfit_series** out) {
  if (!model || !out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    *out = new combfit_series{combfit::simulate(model->model, n_rows, seed)};
    return COMBFIT_OK;
  });
}

combfit_status combfit_bootstrap_json(const combfit_model* model, long n_rows,
                                      const combfit_bootstrap_options* opts, char** json_out) {
  if (!model || !json_out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    combfit::BootstrapOptions bo;
    if (opts) {
      bo.replicas = opts->replicas;
      bo.alpha = opts->alpha;
      bo.bonferroni = opts->bonferroni != 0;
      bo.seed = opts->seed;
      bo.threads = opts->threads;
      bo.fit = to_fit_options(&opts->fit);
    }
    const combfit::BootstrapResult result =
        combfit::parametric_bootstrap(model->model, n_rows, bo);
    *json_out = dup_string(combfit::bootstrap_to_json(result).dump(2));
    return COMBFIT_OK;
  });
}

combfit_status combfit_spearman_json(const combfit_series* series, char** json_out) {
  if (!series || !json_out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    *json_out = dup_string(combfit::spearman_report_json(series->series).dump(2));
    return COMBFIT_OK;
  });
}

combfit_status combfit_zero_mixed_json(const combfit_series* series, uint64_t seed, double alpha,
                                       char** json_out) {
  if (!series || !json_out) return fail(COMBFIT_ERR_INVALID, "null argument");
  return guarded([&] {
    combfit::ZeroMixedOptions zo;
    zo.seed = seed;
    if (alpha > 0.0) zo.alpha = alpha;
    const combfit::ZeroMixedReport report = combfit::zero_mixed_fit(series->series, zo);
    *json_out = dup_string(combfit::zero_mixed_to_json(report, series->series.labels).dump(2));
    return COMBFIT_OK;
  });
}

combfit_status combfit_bench_csv(const int* dims, int n_dims, long n_rows, int repetitions,
                                 uint64_t seed, char** csv_out, char** summary_json_out) {
  if (!dims || n_dims < 1) return fail(COMBFIT_ERR_INVALID, "no dimensions");
  return guarded([&] {
    combfit::BenchOptions bo;
    bo.dims.assign(dims, dims + n_dims);
    if (n_rows > 0) bo.n_rows = n_rows;
    if (repetitions > 0) bo.repetitions = repetitions;
    bo.seed = seed;
    const combfit::BenchReport report = combfit::run_bench(bo);
    if (csv_out) *csv_out = dup_string(combfit::bench_to_csv(report));
    if (summary_json_out) {
      nlohmann::json j{{"comb_linear_r2", report.comb_linear_r2},
                       {"comb_linear_sse", report.comb_linear_sse},
                       {"comb_exp_sse", report.comb_exp_sse},
                       {"comb_classification", report.comb_classification},
                       {"levy_step_ratios", report.levy_step_ratios}};
      *summary_json_out = dup_string(j.dump(2));
    }
    return COMBFIT_OK;
  });
}

}  // extern "C"
