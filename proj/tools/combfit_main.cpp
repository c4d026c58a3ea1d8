// combfit command-line tool. Batch subcommands over claim-series CSVs:
// stats, fit, simulate, bootstrap, spearman, zero-mixed, bench. Every
// stochastic command requires a seed (--seed or COMBFIT_SEED) and writes a
// provenance block into its JSON output so runs are reproducible.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "combfit.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitNoConvergence = 5;

int exit_code_for(combfit_status status) {
  switch (status) {
    case COMBFIT_OK:
      return kExitOk;
    case COMBFIT_ERR_PARSE:
      return kExitParse;
    case COMBFIT_ERR_DATA:
    case COMBFIT_ERR_INVALID:
      return kExitData;
    case COMBFIT_ERR_NUMERIC:
      return kExitNumeric;
    case COMBFIT_ERR_NO_CONVERGENCE:
      return kExitNoConvergence;
  }
  return kExitData;
}

[[noreturn]] void die(combfit_status status) {
  std::cerr << "combfit: " << combfit_last_error() << "\n";
  std::exit(exit_code_for(status));
}

void check(combfit_status status) {
  if (status != COMBFIT_OK) die(status);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  combfit_string_free(s);
  return out;
}

struct CommonArgs {
  std::string input;
  std::string output;
  std::string unit = "millions";
  std::optional<std::uint64_t> seed;
  double mvn_tol = 1e-7;
  int threads = 1;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool needs_input = true) {
  if (needs_input)
    cmd->add_option("-i,--input", args->input, "input claim CSV")->required();
  cmd->add_option("-o,--output", args->output, "output report path");
  cmd->add_option("--unit", args->unit, "claim unit: millions|dkk")
      ->check(CLI::IsMember({"millions", "dkk"}));
  cmd->add_option("--seed", args->seed, "RNG seed (COMBFIT_SEED as fallback)");
  cmd->add_option("--mvn-tol", args->mvn_tol, "orthant probability tolerance");
  cmd->add_option("--threads", args->threads, "worker threads for replicas");
  cmd->add_flag("--force", args->force, "allow overwriting the output file");
}

std::uint64_t require_seed(const CommonArgs& args) {
  if (args.seed) return *args.seed;
  if (const char* env = std::getenv("COMBFIT_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      std::cerr << "combfit: COMBFIT_SEED is not a valid integer\n";
      std::exit(kExitData);
    }
  }
  std::cerr << "combfit: this command is stochastic; pass --seed or set COMBFIT_SEED\n";
  std::exit(kExitData);
}

void write_output(const CommonArgs& args, const std::string& text) {
  if (args.output.empty()) return;
  if (std::filesystem::exists(args.output) && !args.force) {
    std::cerr << "combfit: '" << args.output << "' exists; pass --force to overwrite\n";
    std::exit(kExitData);
  }
  std::ofstream out(args.output);
  if (!out) {
    std::cerr << "combfit: cannot write '" << args.output << "'\n";
    std::exit(kExitData);
  }
  out << text;
}

json provenance(const std::string& command, std::uint64_t seed, double mvn_tol) {
  return {{"command", command},
          {"seed", seed},
          {"mvn_tol", mvn_tol},
          {"library_version", combfit_version()},
          {"timestamp_unix", static_cast<long>(std::time(nullptr))}};
}

combfit_series* load_series(const CommonArgs& args) {
  combfit_series* s = nullptr;
  check(combfit_series_load(args.input.c_str(), args.unit == "dkk" ? 1 : 0, &s));
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "combfit: cannot open '" << path << "'\n";
    std::exit(kExitData);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_correlation_table(const json& corr, const json& labels) {
  std::cout << "correlation:\n";
  for (size_t i = 0; i < corr.size(); ++i) {
    std::cout << "  " << labels[i].get<std::string>() << ":";
    for (size_t j = 0; j < corr[i].size(); ++j) {
      char buf[16];
      std::snprintf(buf, sizeof buf, " %7.4f", corr[i][j].get<double>());
      std::cout << buf;
    }
    std::cout << "\n";
  }
}

// ---- subcommands ----

int run_stats(const CommonArgs& args, const std::string& columns) {
  combfit_series* s = load_series(args);
  if (!columns.empty()) {
    combfit_series* sel = nullptr;
    check(combfit_series_select(s, columns.c_str(), &sel));
    combfit_series_free(s);
    s = sel;
  }
  char* out = nullptr;
  check(combfit_series_stats_json(s, &out));
  json doc = json::parse(take_string(out));
  doc["provenance"] = provenance("stats", 0, args.mvn_tol);
  write_output(args, doc.dump(2) + "\n");

  std::cout << "n_days: " << doc["n_days"] << "\n";
  for (const auto& col : doc["columns"])
    std::cout << "  " << col["label"].get<std::string>() << ": positives "
              << col["n_positive"] << " (" << 100.0 * col["share"].get<double>()
              << "%), mean " << col["mean"].get<double>() << ", min "
              << col["min"].get<double>() << ", max " << col["max"].get<double>() << "\n";
  std::cout << "pair co-jumps: " << doc["pair_co_jumps"].dump() << "\n";
  std::cout << "pair no-jumps: " << doc["pair_no_jumps"].dump() << "\n";
  std::cout << "joint co-jumps: " << doc["joint_co_jumps"] << ", joint no-jumps: "
            << doc["joint_no_jumps"] << "\n";
  combfit_series_free(s);
  return kExitOk;
}

int run_fit(const CommonArgs& args, int restarts, int max_iter, const std::string& model_out) {
  const std::uint64_t seed = require_seed(args);
  combfit_series* s = load_series(args);
  combfit_fit_options opts;
  combfit_fit_options_init(&opts);
  opts.seed = seed;
  opts.mvn_tol = args.mvn_tol;
  if (restarts > 0) opts.restarts = restarts;
  if (max_iter > 0) opts.max_iter = max_iter;

  combfit_model* model = nullptr;
  char* report = nullptr;
  const combfit_status status = combfit_fit(s, &opts, &model, &report);
  if (status != COMBFIT_OK && status != COMBFIT_ERR_NO_CONVERGENCE) die(status);

  json doc = json::parse(take_string(report));
  doc["provenance"] = provenance("fit", seed, args.mvn_tol);
  write_output(args, doc.dump(2) + "\n");
  if (!model_out.empty() && model) {
    char* mj = nullptr;
    check(combfit_model_to_json(model, &mj));
    CommonArgs margs = args;
    margs.output = model_out;
    write_output(margs, take_string(mj) + "\n");
  }

  std::cout << "loglik: " << doc["loglik"].get<double>()
            << "  converged: " << (doc["converged"].get<bool>() ? "yes" : "no") << "\n";
  std::cout << "marginals (p, mu, sigma):\n";
  for (const auto& m : doc["marginals"])
    std::cout << "  " << m.value("label", std::string("?")) << ": " << m["p"].get<double>()
              << ", " << m["mu"].get<double>() << ", " << m["sigma"].get<double>() << "\n";
  json labels = json::array();
  for (const auto& m : doc["marginals"]) labels.push_back(m.value("label", std::string("?")));
  print_correlation_table(doc["correlation"], labels);

  combfit_model_free(model);
  combfit_series_free(s);
  if (status == COMBFIT_ERR_NO_CONVERGENCE) {
    std::cerr << "combfit: " << combfit_last_error() << "\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int run_simulate(const CommonArgs& args, const std::string& model_path, long rows) {
  const std::uint64_t seed = require_seed(args);
  const std::string model_text = read_file(model_path);
  combfit_model* model = nullptr;
  check(combfit_model_from_json(model_text.c_str(), args.mvn_tol, seed, &model));
  combfit_series* sim = nullptr;
  check(combfit_simulate(model, rows, seed, &sim));
  if (!args.output.empty()) {
    if (std::filesystem::exists(args.output) && !args.force) {
      std::cerr << "combfit: '" << args.output << "' exists; pass --force to overwrite\n";
      return kExitData;
    }
    check(combfit_series_to_csv(sim, args.output.c_str()));
  }
  long n = 0;
  int d = 0;
  combfit_series_shape(sim, &n, &d);
  std::cout << provenance("simulate", seed, args.mvn_tol).dump() << "\n";
  std::cout << "simulated " << n << " rows x " << d << " columns"
            << (args.output.empty() ? "" : " -> " + args.output) << "\n";
  combfit_series_free(sim);
  combfit_model_free(model);
  return kExitOk;
}

int run_bootstrap(const CommonArgs& args, int replicas, double alpha, bool no_bonferroni,
                  int restarts) {
  const std::uint64_t seed = require_seed(args);
  combfit_series* s = load_series(args);
  long n_rows = 0;
  combfit_series_shape(s, &n_rows, nullptr);

  combfit_fit_options fit_opts;
  combfit_fit_options_init(&fit_opts);
  fit_opts.seed = seed;
  fit_opts.mvn_tol = args.mvn_tol;
  if (restarts > 0) fit_opts.restarts = restarts;

  combfit_model* model = nullptr;
  char* fit_report = nullptr;
  check(combfit_fit(s, &fit_opts, &model, &fit_report));
  json doc;
  doc["fit"] = json::parse(take_string(fit_report));

  combfit_bootstrap_options opts;
  combfit_bootstrap_options_init(&opts);
  opts.replicas = replicas;
  opts.alpha = alpha;
  opts.bonferroni = no_bonferroni ? 0 : 1;
  opts.seed = seed;
  opts.threads = args.threads;
  opts.fit = fit_opts;

  char* boot = nullptr;
  check(combfit_bootstrap_json(model, n_rows, &opts, &boot));
  doc["bootstrap"] = json::parse(take_string(boot));
  doc["provenance"] = provenance("bootstrap", seed, args.mvn_tol);
  write_output(args, doc.dump(2) + "\n");

  const json& b = doc["bootstrap"];
  std::cout << "bootstrap (" << b["n_replicas"] << " replicas, alpha " << b["alpha"]
            << (b["bonferroni"].get<bool>() ? ", Bonferroni" : "") << ")\n";
  for (size_t p = 0; p < b["parameter_names"].size(); ++p) {
    const auto& ci = b["intervals"][p];
    std::cout << "  " << b["parameter_names"][p].get<std::string>() << ": ["
              << ci[0].get<double>() << ", " << ci[1].get<double>() << "]\n";
  }
  combfit_model_free(model);
  combfit_series_free(s);
  return kExitOk;
}

int run_spearman(const CommonArgs& args) {
  combfit_series* s = load_series(args);
  char* out = nullptr;
  check(combfit_spearman_json(s, &out));
  json doc = json::parse(take_string(out));
  doc["provenance"] = provenance("spearman", 0, args.mvn_tol);
  write_output(args, doc.dump(2) + "\n");
  std::cout << "pairwise tie bounds (Gaussian correlation scale):\n";
  for (const auto& p : doc["pairs"])
    std::cout << "  " << p["labels"][0].get<std::string>() << "-"
              << p["labels"][1].get<std::string>() << ": [" << p["r_bounds"][0].get<double>()
              << ", " << p["r_bounds"][1].get<double>() << "]\n";
  combfit_series_free(s);
  return kExitOk;
}

int run_zero_mixed(const CommonArgs& args, double alpha) {
  combfit_series* s = load_series(args);
  char* out = nullptr;
  check(combfit_zero_mixed_json(s, args.seed.value_or(0), alpha, &out));
  json doc = json::parse(take_string(out));
  doc["provenance"] = provenance("zero-mixed", args.seed.value_or(0), args.mvn_tol);
  write_output(args, doc.dump(2) + "\n");
  std::cout << "zero-mixed occurrence probabilities:\n";
  for (const auto& sub : doc["subsets"]) {
    std::cout << "  {";
    for (size_t i = 0; i < sub["labels"].size(); ++i)
      std::cout << (i ? "," : "") << sub["labels"][i].get<std::string>();
    std::cout << "}: " << sub["p_hat"].get<double>();
    if (sub.contains("correlation")) {
      std::cout << "  corr " << sub["correlation"].dump();
      if (sub["wide"].get<bool>()) std::cout << " (wide)";
    }
    if (sub["undetermined"].get<bool>()) std::cout << " (undetermined)";
    std::cout << "\n";
  }
  combfit_series_free(s);
  return kExitOk;
}

int run_bench(const CommonArgs& args, const std::string& dims_csv, long rows, int reps) {
  const std::uint64_t seed = require_seed(args);
  std::vector<int> dims;
  std::stringstream ss(dims_csv);
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(std::stoi(item));
  char* csv = nullptr;
  char* summary = nullptr;
  check(combfit_bench_csv(dims.data(), static_cast<int>(dims.size()), rows, reps, seed, &csv,
                          &summary));
  const std::string table = take_string(csv);
  write_output(args, table);
  std::cout << table;
  std::cout << take_string(summary) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"combfit: dependence modeling for sparse claim time series"};
  app.require_subcommand(1);

  CommonArgs stats_args;
  std::string stats_columns;
  CLI::App* stats = app.add_subcommand("stats", "descriptive statistics of a claim CSV");
  add_common(stats, &stats_args);
  stats->add_option("--columns", stats_columns, "comma-separated column restriction");

  CommonArgs fit_args;
  int fit_restarts = 0, fit_max_iter = 0;
  std::string fit_model_out;
  CLI::App* fit = app.add_subcommand("fit", "two-stage model fit");
  add_common(fit, &fit_args);
  fit->add_option("--restarts", fit_restarts, "optimizer restarts");
  fit->add_option("--max-iter", fit_max_iter, "optimizer iteration cap");
  fit->add_option("--model-out", fit_model_out, "write the fitted model JSON here");

  CommonArgs sim_args;
  std::string sim_model;
  long sim_rows = 1000;
  CLI::App* sim = app.add_subcommand("simulate", "simulate a claim series from a model JSON");
  add_common(sim, &sim_args, /*needs_input=*/false);
  sim->add_option("--model", sim_model, "model JSON path")->required();
  sim->add_option("--rows", sim_rows, "number of rows to simulate");

  CommonArgs boot_args;
  int boot_replicas = 1000, boot_restarts = 0;
  double boot_alpha = 0.05;
  bool no_bonferroni = false;
  CLI::App* boot = app.add_subcommand("bootstrap", "fit plus parametric-bootstrap intervals");
  add_common(boot, &boot_args);
  boot->add_option("-B,--replicas", boot_replicas, "bootstrap replicas");
  boot->add_option("--alpha", boot_alpha, "interval error budget");
  boot->add_flag("--no-bonferroni", no_bonferroni, "report plain alpha/2 quantiles");
  boot->add_option("--restarts", boot_restarts, "optimizer restarts per refit");

  CommonArgs spear_args;
  CLI::App* spear = app.add_subcommand("spearman", "pairwise Spearman tie bounds");
  add_common(spear, &spear_args);

  CommonArgs zm_args;
  double zm_alpha = 0.05;
  CLI::App* zm = app.add_subcommand("zero-mixed", "subset-wise benchmark calibrator");
  add_common(zm, &zm_args);
  zm->add_option("--alpha", zm_alpha, "interval error budget");

  CommonArgs bench_args;
  std::string bench_dims = "2,3,20,100";
  long bench_rows = 1000;
  int bench_reps = 20;
  CLI::App* bench = app.add_subcommand("bench", "simulation timing across dimensions");
  add_common(bench, &bench_args, /*needs_input=*/false);
  bench->add_option("--dims", bench_dims, "comma-separated dimension list");
  bench->add_option("--rows", bench_rows, "rows per timed replica");
  bench->add_option("--reps", bench_reps, "timed repetitions");

  CLI11_PARSE(app, argc, argv);

  if (stats->parsed()) return run_stats(stats_args, stats_columns);
  if (fit->parsed()) return run_fit(fit_args, fit_restarts, fit_max_iter, fit_model_out);
  if (sim->parsed()) return run_simulate(sim_args, sim_model, sim_rows);
  if (boot->parsed())
    return run_bootstrap(boot_args, boot_replicas, boot_alpha, no_bonferroni, boot_restarts);
  if (spear->parsed()) return run_spearman(spear_args);
  if (zm->parsed()) return run_zero_mixed(zm_args, zm_alpha);
  if (bench->parsed()) return run_bench(bench_args, bench_dims, bench_rows, bench_reps);
  return kExitOk;
}
