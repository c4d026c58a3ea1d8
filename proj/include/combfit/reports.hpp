#pragma once

// JSON interchange: the model document used to compose fit -> simulate ->
// bootstrap pipelines, plus machine-readable reports for every command.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "combfit/bootstrap.hpp"
#include "combfit/data_io.hpp"
#include "combfit/estimation.hpp"
#include "combfit/model.hpp"

namespace combfit {

std::string library_version();

// {"marginals":[{"p":..,"mu":..,"sigma":..},...],"correlation":[[..],..]}
nlohmann::json model_to_json(const CombBernoulliModel& model);
CombBernoulliModel model_from_json(const nlohmann::json& doc, double mvn_tol = kDefaultMvnTol,
                                   std::uint64_t base_seed = 0);

nlohmann::json summary_to_json(const DatasetSummary& summary);
nlohmann::json fit_report_to_json(const FitReport& report,
                                  const std::vector<std::string>& labels);
nlohmann::json bootstrap_to_json(const BootstrapResult& result);
nlohmann::json zero_mixed_to_json(const ZeroMixedReport& report,
                                  const std::vector<std::string>& labels);
// Pairwise tie bounds on both scales (Spearman rho and its Gaussian
// correlation equivalent).
nlohmann::json spearman_report_json(const ClaimSeries& series);

// Attached to every command output: seed, tolerances, library version and a
// timestamp (the one field reruns are allowed to differ in).
nlohmann::json provenance_json(const std::string& command, std::uint64_t seed, double mvn_tol);

}  // namespace combfit
