// missmult command-line tool.
//
// Subcommands:
//   simulate   generate a synthetic dataset plus a ground-truth sidecar
//   fit        run the Gibbs sampler on a dataset directory
//   summarize  posterior summaries from a fit directory (optionally scored
//              against a ground-truth file)
//   replicate  generate-fit-score study across model variants
//   diagnose   Gelman-Rubin and Metropolis acceptance diagnostics
//
// stdout carries human-readable tables; stderr carries structured one-line
// logs ("missmult-warn: {...}" / "missmult-error: {...}"). Exit codes:
// 0 success, 1 usage error, 2 data error, 3 numerical failure.
#include <algorithm>
#include <cinttypes>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <missmult/errors.hpp>
#include <missmult/gibbs.hpp>
#include <missmult/io.hpp>
#include <missmult/metrics.hpp>
#include <missmult/replicate.hpp>
#include <missmult/simulate.hpp>
#include <missmult/types.hpp>

namespace fs = std::filesystem;
using namespace missmult;

namespace {

void emit_log(const char* channel, const std::string& kind,
              const std::string& message) {
  nlohmann::ordered_json line;
  line["kind"] = kind;
  line["message"] = message;
  std::cerr << channel << ": " << line.dump() << "\n";
}

void warn(const std::string& kind, const std::string& message) {
  emit_log("missmult-warn", kind, message);
}

std::string fmt(const char* pattern, ...) {
  va_list args;
  va_start(args, pattern);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  int scenario = 0;  // 0 = take from config
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
};

int run_simulate(const SimulateArgs& args) {
  FileConfig cfg = args.config_path.empty()
                       ? FileConfig{}
                       : parse_config_file(args.config_path);
  if (args.scenario != 0) cfg.scenario = args.scenario;
  if (args.seed_set) cfg.run.seed = args.seed;
  if (cfg.scenario != 1 && cfg.scenario != 2) {
    throw UsageError("simulate: scenario must be 1 or 2");
  }

  SimulatedData sim = cfg.scenario == 1
                          ? gen_scenario1(cfg.scenario1, cfg.run.seed, 0)
                          : gen_scenario2(cfg.scenario2, cfg.run.seed, 0);

  TruthArtifact art;
  art.scenario = cfg.scenario;
  art.seed = cfg.run.seed;
  art.replicate = 0;
  art.truth = std::move(sim.truth);
  art.n_validated = sim.n_validated;
  art.resampled_sites = sim.resampled_sites;
  art.empty_visits = sim.empty_visits;
  if (sim.empty_visits > 0) {
    // records.csv has one row per classified individual, so a visit with no
    // individuals cannot be represented; drop them here, keep the index maps
    // in the sidecar so truth matrices can still be aligned.
    KeptMaps maps = kept_after_drop(sim.data.dims);
    art.kept_sites = std::move(maps.sites);
    art.kept_visits = std::move(maps.visits);
    int dropped_sites = 0;
    drop_empty_visits(sim.data, &dropped_sites);
    warn("data", fmt("dropped %d empty visit(s) (%d site(s) removed "
                     "entirely); original indices recorded in "
                     "ground_truth.json",
                     sim.empty_visits, dropped_sites));
  }

  fs::create_directories(args.out_dir);
  write_dataset(args.out_dir, sim.data);
  write_ground_truth(
      (fs::path(args.out_dir) / "ground_truth.json").string(), art);

  const Dimensions& d = sim.data.dims;
  std::printf("scenario %d dataset: %d sites, %d visits, %d individuals "
              "(%d validated), %d categories\n",
              cfg.scenario, d.n_sites, d.total_visits(),
              d.total_individuals(), sim.n_validated, d.n_categories);
  std::printf("wrote %s\n", args.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string data_dir;
  std::string model;
  std::string config_path;
  int chains = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int threads = -1;
};

int run_fit(const FitArgs& args) {
  FileConfig cfg = args.config_path.empty()
                       ? FileConfig{}
                       : parse_config_file(args.config_path);
  if (!args.model.empty()) cfg.run.variant = variant_from_string(args.model);
  if (args.chains != 0) cfg.run.chains = args.chains;
  if (args.seed_set) cfg.run.seed = args.seed;
  if (args.threads >= 0) cfg.threads = args.threads;

  const LoadedData loaded =
      load_dataset(args.data_dir, cfg.standardize_covariates);
  if (cfg.run.variant == Variant::ZIDM &&
      std::any_of(loaded.data.validated.begin(), loaded.data.validated.end(),
                  [](int v) { return v >= 0; })) {
    warn("model", "zidm has no misclassification component; validated "
                  "labels in this dataset are ignored");
  }
  apply_nu(cfg, loaded.data.dims.n_categories);

  FitArtifact art;
  art.chains = run_chains(loaded.data, cfg.hyper, cfg.run, 0, nullptr,
                          cfg.threads);
  Hyperparameters hyper = cfg.hyper;
  hyper.finalize(loaded.data.dims.n_categories, cfg.run.variant);
  art.hyper = hyper;
  art.site_cov = loaded.site_cov;
  art.visit_cov = loaded.visit_cov;
  art.indiv_cov = loaded.indiv_cov;
  art.class_labels = loaded.data.class_labels;
  art.write_binary = cfg.write_binary;
  save_fit(args.out_dir, art);

  double runtime = 0.0, accept = 0.0;
  for (const ChainOutput& c : art.chains) {
    runtime += c.runtime_seconds;
    accept += c.accept_rate_beta_gamma.size() > 0
                  ? c.accept_rate_beta_gamma.mean()
                  : 0.0;
  }
  accept /= static_cast<double>(art.chains.size());
  std::printf("fit %s: %d chain(s) x %d retained draws in %.2fs "
              "(mean beta_gamma acceptance %.3f)\n",
              variant_to_string(cfg.run.variant).c_str(), cfg.run.chains,
              art.chains.front().n_retained, runtime, accept);
  std::printf("wrote %s\n", args.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// summarize

struct SummarizeArgs {
  std::string fit_dir;
  std::string truth_path;
};

void print_metric_row(const char* label, const BlockMetrics& m) {
  auto cell = [](double v) {
    return std::isfinite(v) ? fmt("%10.4f", v) : fmt("%10s", "-");
  };
  if (!m.present) {
    std::printf("%-12s%10s%10s%10s\n", label, "-", "-", "-");
  } else {
    std::printf("%-12s%s%s%s\n", label, cell(m.abs).c_str(),
                cell(m.frob).c_str(), cell(m.cov).c_str());
  }
}

int run_summarize(const SummarizeArgs& args) {
  const FitArtifact art = load_fit(args.fit_dir);
  const PosteriorSummary summary = posterior_summary(art.chains);

  std::printf("%-24s%14s%14s%14s\n", "name", "mean", "q2.5", "q97.5");
  for (const SummaryRow& row : summary.rows) {
    std::printf("%-24s%14.6g%14.6g%14.6g\n", row.name.c_str(), row.mean,
                row.q025, row.q975);
  }

  if (!args.truth_path.empty()) {
    const TruthArtifact truth = load_ground_truth(args.truth_path);
    const FitScore score =
        score_fit(art.chains, truth.truth, truth.scenario, truth.kept_sites,
                  truth.kept_visits);
    std::printf("\nerror metrics vs %s\n", args.truth_path.c_str());
    std::printf("%-12s%10s%10s%10s\n", "block", "ABS", "FROB", "COV");
    print_metric_row("eta", score.eta);
    print_metric_row("psi", score.psi);
    print_metric_row("Theta", score.Theta);
    print_metric_row("theta_star", score.theta_star);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// replicate

struct ReplicateArgs {
  std::string scenario_config;
  std::string fit_config;
  int replicates = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int threads = -1;
};

int run_replicate(const ReplicateArgs& args) {
  // The scenario config governs data generation (scenario, scenario1_*,
  // scenario2_*, seed, replicates); the fit config governs the sampler (run
  // settings, hyperparameters, variants, threads). Both use the same grammar,
  // so one file may serve as both.
  const FileConfig scen = parse_config_file(args.scenario_config);
  FileConfig fitc = parse_config_file(args.fit_config);
  const int t_count = scen.scenario == 1 ? scen.scenario1.n_categories
                                         : scen.scenario2.n_categories;
  apply_nu(fitc, t_count);

  StudyConfig study;
  study.scenario = scen.scenario;
  study.scenario1 = scen.scenario1;
  study.scenario2 = scen.scenario2;
  study.replicates = scen.replicates;
  study.run = fitc.run;
  study.run.seed = scen.run.seed;
  study.hyper = fitc.hyper;
  study.variants = fitc.variants;
  study.use_scenario_priors = fitc.use_scenario_priors;
  study.threads = fitc.threads;
  if (args.replicates > 0) study.replicates = args.replicates;
  if (args.seed_set) study.run.seed = args.seed;
  if (args.threads >= 0) study.threads = args.threads;

  const StudyResult result = replicate_study(study);
  for (const std::string& line : result.failure_log) warn("fit", line);

  const std::string table = study_table(result);
  fs::create_directories(args.out_dir);
  std::string report = table;
  if (!result.failure_log.empty()) {
    report += "\nfailures:\n";
    for (const std::string& line : result.failure_log) {
      report += "  " + line + "\n";
    }
  }
  write_file_atomic((fs::path(args.out_dir) / "study.txt").string(), report);
  write_file_atomic((fs::path(args.out_dir) / "study.csv").string(),
                    study_csv(result));

  std::fputs(table.c_str(), stdout);
  std::printf("wrote %s\n", args.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose

int run_diagnose(const std::string& fit_dir) {
  const FitArtifact art = load_fit(fit_dir);
  if (art.chains.size() < 2) {
    throw UsageError("diagnose requires a fit with at least two chains");
  }

  const std::vector<DiagnosticRow> rows = gelman_rubin(art.chains);
  std::printf("%-24s%12s\n", "name", "rhat");
  double worst = 0.0;
  int converged = 0;
  for (const DiagnosticRow& row : rows) {
    std::printf("%-24s%12.4f\n", row.name.c_str(), row.rhat);
    worst = std::max(worst, row.rhat);
    if (row.rhat < 1.1) ++converged;
  }
  std::printf("\n%d/%zu monitored scalars with rhat < 1.1 (max %.4f)\n",
              converged, rows.size(), worst);

  for (size_t k = 0; k < art.chains.size(); ++k) {
    const Eigen::VectorXd& acc = art.chains[k].accept_rate_beta_gamma;
    if (acc.size() == 0) continue;
    std::printf("chain %zu beta_gamma acceptance: mean %.3f, min %.3f, "
                "max %.3f\n",
                k, acc.mean(), acc.minCoeff(), acc.maxCoeff());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian multinomial inference for classified count data "
               "with false negatives and misclassification"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Generate a synthetic dataset with a ground-truth sidecar");
  sim->add_option("--scenario", sim_args.scenario,
                  "Generator scenario (1 or 2); overrides the config file")
      ->check(CLI::Range(1, 2));
  sim->add_option("--config", sim_args.config_path, "Configuration file");
  sim->add_option("--seed", sim_args.seed, "Master RNG seed")
      ->each([&](const std::string&) { sim_args.seed_set = true; });
  sim->add_option("--out", sim_args.out_dir, "Output dataset directory")
      ->required();

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand(
      "fit", "Run the Gibbs sampler on a dataset directory");
  fit->add_option("--data", fit_args.data_dir, "Dataset directory")
      ->required();
  fit->add_option("--model", fit_args.model,
                  "Model variant: misszidm, missdm, zidm, or dmdm");
  fit->add_option("--config", fit_args.config_path, "Configuration file");
  fit->add_option("--chains", fit_args.chains, "Number of MCMC chains")
      ->check(CLI::PositiveNumber);
  fit->add_option("--seed", fit_args.seed, "Master RNG seed")
      ->each([&](const std::string&) { fit_args.seed_set = true; });
  fit->add_option("--out", fit_args.out_dir, "Output fit directory")
      ->required();
  fit->add_option("--threads", fit_args.threads,
                  "Worker threads for multi-chain runs (0 = all cores)");

  SummarizeArgs sum_args;
  CLI::App* summarize = app.add_subcommand(
      "summarize", "Posterior summaries from a fit directory");
  summarize->add_option("--fit", sum_args.fit_dir, "Fit directory")
      ->required();
  summarize->add_option("--truth", sum_args.truth_path,
                        "Ground-truth file; adds error metrics");

  ReplicateArgs rep_args;
  CLI::App* replicate = app.add_subcommand(
      "replicate", "Generate-fit-score study across model variants");
  replicate
      ->add_option("--scenario-config", rep_args.scenario_config,
                   "Config controlling data generation")
      ->required();
  replicate
      ->add_option("--fit-config", rep_args.fit_config,
                   "Config controlling the sampler and variants")
      ->required();
  replicate
      ->add_option("--replicates", rep_args.replicates,
                   "Number of replicated datasets")
      ->check(CLI::PositiveNumber);
  replicate->add_option("--seed", rep_args.seed, "Master RNG seed")
      ->each([&](const std::string&) { rep_args.seed_set = true; });
  replicate->add_option("--out", rep_args.out_dir, "Output directory")
      ->required();
  replicate->add_option("--threads", rep_args.threads,
                        "Worker threads (0 = all cores)");

  std::string diag_fit_dir;
  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Gelman-Rubin and acceptance-rate diagnostics");
  diagnose->add_option("--fit", diag_fit_dir, "Fit directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_log("missmult-error", "usage", e.what());
    return 1;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_args);
    if (fit->parsed()) return run_fit(fit_args);
    if (summarize->parsed()) return run_summarize(sum_args);
    if (replicate->parsed()) return run_replicate(rep_args);
    if (diagnose->parsed()) return run_diagnose(diag_fit_dir);
    emit_log("missmult-error", "usage", "no subcommand given");
    return 1;
  } catch (const UsageError& e) {
    emit_log("missmult-error", "usage", e.what());
    return 1;
  } catch (const DataError& e) {
    emit_log("missmult-error", "data", e.what());
    return 2;
  } catch (const NumericalError& e) {
    emit_log("missmult-error", "numerical", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_log("missmult-error", "internal", e.what());
    return 3;
  }
}
